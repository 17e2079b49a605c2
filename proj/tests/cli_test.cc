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

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "test_util.h"
#include "trojanloc/binary_io.h"
#include "trojanloc/cli.h"
#include "trojanloc/corpus.h"

namespace trojanloc {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CliResult {
  int code = 0;
  std::string out;
};

// A tiny configuration so the whole chain runs in well under a second.
class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const json cfg = {
        {"seed", 5},
        {"fixture_bases", 8},
        {"backend", {{"d_model", 16}, {"max_tokens", 128}}},
        {"paths",
         {{"corpus", (dir_ / "fixtures.jsonl").string()},
          {"work_dir", (dir_ / "work").string()}}},
        {"model",
         {{"d_enc", 6},
          {"ae", {{"max_epochs", 5}, {"batch_size", 64}}},
          {"gbdt", {{"n_trees", 10}, {"max_depth", 3}}}}}};
    std::ofstream(dir_ / "config.json") << cfg.dump(2);
  }

  CliResult Run(std::vector<std::string> args) {
    args.insert(args.begin(), {"--config", (dir_ / "config.json").string(), "-q"});
    std::ostringstream out;
    const int code = RunCli(args, out);
    return {code, out.str()};
  }

  void RunChain() {
    for (const char* stage :
         {"fixtures", "preprocess", "embed", "train-ae", "train", "evaluate"}) {
      ASSERT_EQ(Run({stage}).code, 0) << stage;
    }
  }

  std::map<std::string, std::string> Snapshot() {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir_.path())) {
      if (e.is_regular_file()) {
        files[fs::relative(e.path(), dir_.path()).string()] =
            ReadFileBytes(e.path());
      }
    }
    return files;
  }

  ArtifactPaths paths() const { return ArtifactPaths(dir_ / "work"); }

  testing::TempDir dir_;
};

TEST(ExitCodeFor, ValidationVersusIo) {
  EXPECT_EQ(ExitCodeFor(ErrorCode::kMissingArtifact), 1);
  EXPECT_EQ(ExitCodeFor(ErrorCode::kConfigInvalid), 1);
  EXPECT_EQ(ExitCodeFor(ErrorCode::kInvalidWindow), 1);
  EXPECT_EQ(ExitCodeFor(ErrorCode::kIoError), 2);
  EXPECT_EQ(ExitCodeFor(ErrorCode::kConnectFailed), 2);
  EXPECT_EQ(ExitCodeFor(ErrorCode::kTruncatedFile), 2);
}

TEST_F(CliTest, FixturesThenStatsReportsOneFifthClean) {
  const std::string out = (dir_ / "c.jsonl").string();
  ASSERT_EQ(Run({"fixtures", "--bases", "50", "--seed", "7", "--out", out}).code,
            0);
  const CliResult r = Run({"stats", out});
  ASSERT_EQ(r.code, 0);
  const json s = json::parse(r.out);
  EXPECT_EQ(s["module_clean_fraction"], 0.2);
  EXPECT_EQ(s["base_designs"], 50);
  EXPECT_EQ(s["trojaned_designs"], 200);
}

TEST_F(CliTest, FullChainEmitsReports) {
  RunChain();
  for (const char* task : {"detect", "type", "line"}) {
    const json report = json::parse(ReadFileBytes(paths().Report(task)));
    EXPECT_EQ(report["task"], task);
    EXPECT_EQ(report["config"]["d_enc"], 6);
  }
  const json meta = json::parse(ReadFileBytes(paths().line_meta));
  EXPECT_EQ(meta["p"], 3);
  EXPECT_EQ(meta["d_model"], 16);

  const CliResult loc = Run({"localize", "--text"});
  ASSERT_EQ(loc.code, 0);
  const Corpus corpus = LoadManifest(paths().corpus);
  size_t test_modules = 0;
  for (const auto& r : corpus.records) {
    if (r.split != Split::kTest) continue;
    ++test_modules;
    EXPECT_TRUE(fs::exists(paths().Localization(r.id(), ".json")));
    EXPECT_TRUE(fs::exists(paths().Localization(r.id(), ".txt")));
  }
  EXPECT_EQ(static_cast<size_t>(std::count(loc.out.begin(), loc.out.end(), '\n')),
            test_modules);
}

TEST_F(CliTest, LocalizeArbitraryFile) {
  RunChain();
  const fs::path v = dir_ / "design.v";
  std::ofstream(v) << "module design (input wire clk, output reg q);\n"
                      "  // comment\n"
                      "  always @(posedge clk) q <= ~q;\n"
                      "endmodule\n";
  const CliResult r = Run({"localize", "--file", v.string()});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("design:", 0), 0u);
  EXPECT_TRUE(fs::exists(paths().Localization("design", ".json")));
}

TEST_F(CliTest, EvaluateBeforeTrainIsMissingArtifact) {
  ASSERT_EQ(Run({"fixtures"}).code, 0);
  ASSERT_EQ(Run({"preprocess"}).code, 0);
  EXPECT_EQ(Run({"evaluate"}).code, 1);
  EXPECT_EQ(Run({"train"}).code, 1);
  EXPECT_EQ(Run({"localize"}).code, 1);
}

TEST_F(CliTest, EmbedBeforePreprocessIsMissingArtifact) {
  EXPECT_EQ(Run({"embed"}).code, 1);
}

TEST_F(CliTest, BadInvocations) {
  EXPECT_EQ(Run({"frobnicate"}).code, 1);
  EXPECT_EQ(Run({}).code, 1);
  EXPECT_EQ(Run({"--backend", "gpu", "stats"}).code, 1);
  std::ofstream(dir_ / "bad.json") << R"({"model": {"p": 2}})";
  std::ostringstream out;
  EXPECT_EQ(RunCli({"--config", (dir_ / "bad.json").string(), "-q", "stats"}, out),
            1);
}

TEST_F(CliTest, CorruptArtifactIsIoClassFailure) {
  RunChain();
  std::ofstream(paths().detect, std::ios::trunc) << "garbage";
  EXPECT_EQ(Run({"evaluate"}).code, 2);
}

TEST_F(CliTest, RemoteBackendUnreachableExitsTwo) {
  ASSERT_EQ(Run({"fixtures"}).code, 0);
  ASSERT_EQ(Run({"preprocess"}).code, 0);
  const json cfg = {{"backend",
                     {{"kind", "remote"},
                      {"endpoint",
                       {{"base_url", "http://127.0.0.1:9"},
                        {"retries", 0},
                        {"timeout_ms", 200}}}}},
                    {"paths", {{"work_dir", (dir_ / "work").string()}}}};
  std::ofstream(dir_ / "remote.json") << cfg.dump();
  std::ostringstream out;
  EXPECT_EQ(RunCli({"--config", (dir_ / "remote.json").string(), "-q", "embed"},
                   out),
            2);
}

TEST_F(CliTest, RerunsAreByteIdentical) {
  RunChain();
  const auto first = Snapshot();
  RunChain();
  EXPECT_EQ(Snapshot(), first);
  // --no-cache recomputes to the same bytes.
  ASSERT_EQ(Run({"--no-cache", "embed"}).code, 0);
  EXPECT_EQ(Snapshot(), first);
}

TEST_F(CliTest, DeletedArtifactIsRegenerated) {
  RunChain();
  const auto first = Snapshot();
  fs::remove(paths().detect);
  fs::remove(paths().line_cache);
  ASSERT_EQ(Run({"embed"}).code, 0);
  ASSERT_EQ(Run({"train"}).code, 0);
  EXPECT_EQ(Snapshot(), first);
}

TEST_F(CliTest, SeedFlagOverridesConfig) {
  ASSERT_EQ(Run({"fixtures"}).code, 0);
  const std::string a = ReadFileBytes(dir_ / "fixtures.jsonl");
  ASSERT_EQ(Run({"--seed", "6", "fixtures"}).code, 0);
  EXPECT_NE(ReadFileBytes(dir_ / "fixtures.jsonl"), a);
  ASSERT_EQ(Run({"--seed", "5", "fixtures"}).code, 0);
  EXPECT_EQ(ReadFileBytes(dir_ / "fixtures.jsonl"), a);
}

TEST_F(CliTest, ChangedWindowNeedsRetrain) {
  RunChain();
  // p only affects the line booster, so train works without train-ae...
  json cfg = json::parse(ReadFileBytes(dir_ / "config.json"));
  cfg["model"]["p"] = 0;
  std::ofstream(dir_ / "config.json", std::ios::trunc) << cfg.dump();
  ASSERT_EQ(Run({"evaluate"}).code, 1);  // stale line model
  ASSERT_EQ(Run({"train"}).code, 0);
  ASSERT_EQ(Run({"evaluate"}).code, 0);
  // ...while m changes the line autoencoder width.
  cfg["model"]["m"] = 0;
  std::ofstream(dir_ / "config.json", std::ios::trunc) << cfg.dump();
  EXPECT_EQ(Run({"train"}).code, 1);
  ASSERT_EQ(Run({"train-ae"}).code, 0);
  EXPECT_EQ(Run({"train"}).code, 0);
}

}  // namespace
}  // namespace trojanloc
