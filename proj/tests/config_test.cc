// Copyright 2026 The TrojanLoC Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "test_util.h"
#include "trojanloc/config.h"
#include "trojanloc/error.h"

namespace trojanloc {
namespace {

using nlohmann::json;

ErrorCode CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

TEST(ConfigFromJson, EmptyDocumentKeepsDefaults) {
  const RunConfig c = ConfigFromJson(json::object());
  EXPECT_EQ(c.seed, 0u);
  EXPECT_EQ(c.backend.kind, BackendKind::kReference);
  EXPECT_EQ(c.backend.d_model, 64);
  EXPECT_EQ(c.model.d_enc, 32);
  EXPECT_EQ(c.model.context_window, 3);
  EXPECT_TRUE(c.model.use_module_embedding);
  EXPECT_EQ(c.model.threshold, 0.5);
  EXPECT_EQ(c.model.gbdt.n_trees, 200);
  EXPECT_EQ(c.model.ae.max_epochs, 100);
  EXPECT_NO_THROW(c.Validate());
}

TEST(ConfigFromJson, ReadsNestedSections) {
  const json j = json::parse(R"({
    "seed": 9, "workers": 3,
    "backend": {"kind": "remote", "endpoint": {"base_url": "http://h:1/x",
                "max_batch": 7, "concurrency": 2}},
    "paths": {"corpus": "c.jsonl", "work_dir": "w"},
    "preprocess": {"train_fraction": 0.7, "group_by_base": false},
    "model": {"d_enc": 16, "m": 0, "p": 5, "threshold": 0.4,
              "ae": {"learning_rate": 0.01},
              "gbdt": {"n_trees": 12, "growth": "leafwise", "max_leaves": 8}}
  })");
  const RunConfig c = ConfigFromJson(j);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.workers, 3);
  EXPECT_EQ(c.backend.kind, BackendKind::kRemote);
  EXPECT_EQ(c.backend.endpoint.base_url, "http://h:1/x");
  EXPECT_EQ(c.backend.endpoint.max_batch, 7);
  EXPECT_EQ(c.paths.work_dir, "w");
  EXPECT_EQ(c.train_fraction, 0.7);
  EXPECT_FALSE(c.group_by_base);
  EXPECT_EQ(c.model.d_enc, 16);
  EXPECT_FALSE(c.model.use_module_embedding);
  EXPECT_EQ(c.model.context_window, 5);
  EXPECT_EQ(c.model.ae.learning_rate, 0.01);
  EXPECT_EQ(c.model.gbdt.growth, TreeGrowth::kLeafWise);
  EXPECT_EQ(c.model.gbdt.max_leaves, 8);
  EXPECT_NO_THROW(c.Validate());
  const ModelConfig m = c.EffectiveModel();
  EXPECT_EQ(m.seed, 9u);
  EXPECT_EQ(m.workers, 3);
}

TEST(ConfigFromJson, RoundTripsThroughToJson) {
  RunConfig c;
  c.seed = 4;
  c.backend.seed = 11;
  c.model.context_window = 0;
  c.model.gbdt.growth = TreeGrowth::kLeafWise;
  const auto j = ConfigToJson(c);
  const RunConfig back = ConfigFromJson(json::parse(j.dump()));
  EXPECT_EQ(ConfigToJson(back).dump(), j.dump());
}

TEST(ConfigFromJson, RejectsUnknownKeysAndBadValues) {
  for (const char* doc :
       {R"({"sead": 1})", R"({"model": {"denc": 4}})",
        R"({"backend": {"kind": "gpu"}})", R"({"model": {"p": "three"}})",
        R"({"model": {"gbdt": {"growth": "sideways"}}})"}) {
    EXPECT_EQ(CodeOf([&] { ConfigFromJson(json::parse(doc)); }),
              ErrorCode::kConfigInvalid)
        << doc;
  }
}

TEST(RunConfig, ValidateNamesBadFields) {
  auto invalid = [](const char* doc) {
    return CodeOf([&] { ConfigFromJson(json::parse(doc)).Validate(); });
  };
  EXPECT_EQ(invalid(R"({"model": {"p": 4}})"), ErrorCode::kConfigInvalid);
  EXPECT_EQ(invalid(R"({"model": {"d_enc": 64}})"), ErrorCode::kConfigInvalid);
  EXPECT_EQ(invalid(R"({"workers": 0})"), ErrorCode::kConfigInvalid);
  EXPECT_EQ(invalid(R"({"preprocess": {"train_fraction": 1.0}})"),
            ErrorCode::kConfigInvalid);
  EXPECT_EQ(invalid(R"({"backend": {"kind": "remote"}})"),
            ErrorCode::kConfigInvalid);  // no base_url
}

TEST(RunConfig, EncoderSeedDerivesFromGlobalSeed) {
  RunConfig a, b;
  a.seed = 1;
  b.seed = 2;
  EXPECT_NE(a.EncoderSeed(), b.EncoderSeed());
  a.backend.seed = 77;
  EXPECT_EQ(a.EncoderSeed(), 77u);
}

TEST(LoadConfig, FileErrors) {
  testing::TempDir dir;
  EXPECT_EQ(CodeOf([&] { LoadConfig(dir / "none.json"); }), ErrorCode::kIoError);
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_EQ(CodeOf([&] { LoadConfig(dir / "bad.json"); }),
            ErrorCode::kConfigInvalid);
  std::ofstream(dir / "ok.json") << R"({"seed": 5})";
  EXPECT_EQ(LoadConfig(dir / "ok.json").seed, 5u);
}

TEST(ApplyEnvironment, EndpointOverride) {
  RunConfig c;
  c.backend.endpoint.base_url = "http://from-config";
  ::setenv("TROJANLOC_ENDPOINT", "http://from-env:9", 1);
  ApplyEnvironment(c);
  ::unsetenv("TROJANLOC_ENDPOINT");
  EXPECT_EQ(c.backend.endpoint.base_url, "http://from-env:9");
  RunConfig d;
  d.backend.endpoint.base_url = "http://kept";
  ApplyEnvironment(d);
  EXPECT_EQ(d.backend.endpoint.base_url, "http://kept");
}

TEST(MakeBackend, ReferenceUsesConfiguredWidth) {
  RunConfig c;
  c.backend.d_model = 24;
  const auto backend = MakeBackend(c);
  EXPECT_EQ(backend->Describe().d_model, 24);
  EXPECT_EQ(backend->EmbedModuleText("assign a = b;").size(), 24u);
}

}  // namespace
}  // namespace trojanloc
