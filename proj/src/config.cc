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

#include "trojanloc/config.h"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "trojanloc/error.h"
#include "trojanloc/rng.h"

namespace trojanloc {
namespace {

using nlohmann::json;

[[noreturn]] void Invalid(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::kConfigInvalid, field + ": " + why);
}

void RejectUnknown(const json& j, const std::string& where,
                   std::initializer_list<const char*> known) {
  if (!j.is_object()) Invalid(where, "expected an object");
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      Invalid(where.empty() ? key : where + "." + key, "unknown key");
    }
  }
}

// Reads j[key] into *out when present, converting type errors to
// kConfigInvalid.
template <typename T>
void Read(const json& j, const char* key, const std::string& where, T* out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    *out = it->get<T>();
  } catch (const json::exception& e) {
    Invalid(where.empty() ? key : where + "." + key, e.what());
  }
}

std::string Join(const std::string& a, const char* b) {
  return a.empty() ? b : a + "." + b;
}

void ReadAe(const json& j, const std::string& where, AeTrainConfig* ae) {
  RejectUnknown(j, where,
                {"learning_rate", "batch_size", "max_epochs", "patience",
                 "beta1", "beta2", "epsilon"});
  Read(j, "learning_rate", where, &ae->learning_rate);
  Read(j, "batch_size", where, &ae->batch_size);
  Read(j, "max_epochs", where, &ae->max_epochs);
  Read(j, "patience", where, &ae->patience);
  Read(j, "beta1", where, &ae->beta1);
  Read(j, "beta2", where, &ae->beta2);
  Read(j, "epsilon", where, &ae->epsilon);
}

void ReadGbdt(const json& j, const std::string& where, GbdtConfig* g) {
  RejectUnknown(j, where,
                {"n_trees", "max_depth", "learning_rate", "lambda", "gamma",
                 "min_child_weight", "positive_class_weight", "growth",
                 "max_leaves"});
  Read(j, "n_trees", where, &g->n_trees);
  Read(j, "max_depth", where, &g->max_depth);
  Read(j, "learning_rate", where, &g->learning_rate);
  Read(j, "lambda", where, &g->lambda);
  Read(j, "gamma", where, &g->gamma);
  Read(j, "min_child_weight", where, &g->min_child_weight);
  Read(j, "positive_class_weight", where, &g->positive_class_weight);
  Read(j, "max_leaves", where, &g->max_leaves);
  std::string growth = g->growth == TreeGrowth::kDepthWise ? "depthwise"
                                                           : "leafwise";
  Read(j, "growth", where, &growth);
  if (growth == "depthwise") {
    g->growth = TreeGrowth::kDepthWise;
  } else if (growth == "leafwise") {
    g->growth = TreeGrowth::kLeafWise;
  } else {
    Invalid(Join(where, "growth"), "expected depthwise or leafwise");
  }
}

}  // namespace

RunConfig ConfigFromJson(const json& j) {
  RunConfig c;
  RejectUnknown(j, "",
                {"seed", "workers", "backend", "paths", "preprocess", "model",
                 "fixture_bases"});
  Read(j, "seed", "", &c.seed);
  Read(j, "workers", "", &c.workers);
  Read(j, "fixture_bases", "", &c.fixture_bases);
  if (j.contains("backend")) {
    const json& b = j["backend"];
    RejectUnknown(b, "backend",
                  {"kind", "seed", "d_model", "max_tokens", "endpoint"});
    std::string kind = "reference";
    Read(b, "kind", "backend", &kind);
    if (kind == "reference") {
      c.backend.kind = BackendKind::kReference;
    } else if (kind == "remote") {
      c.backend.kind = BackendKind::kRemote;
    } else {
      Invalid("backend.kind", "expected reference or remote");
    }
    if (b.contains("seed") && !b["seed"].is_null()) {
      uint64_t s = 0;
      Read(b, "seed", "backend", &s);
      c.backend.seed = s;
    }
    Read(b, "d_model", "backend", &c.backend.d_model);
    Read(b, "max_tokens", "backend", &c.backend.max_tokens);
    if (b.contains("endpoint")) {
      const json& e = b["endpoint"];
      const std::string w = "backend.endpoint";
      RejectUnknown(e, w,
                    {"base_url", "timeout_ms", "max_batch", "retries",
                     "backoff_ms", "concurrency"});
      EndpointConfig& ep = c.backend.endpoint;
      Read(e, "base_url", w, &ep.base_url);
      Read(e, "timeout_ms", w, &ep.timeout_ms);
      Read(e, "max_batch", w, &ep.max_batch);
      Read(e, "retries", w, &ep.retries);
      Read(e, "backoff_ms", w, &ep.backoff_ms);
      Read(e, "concurrency", w, &ep.concurrency);
    }
  }
  if (j.contains("paths")) {
    const json& p = j["paths"];
    RejectUnknown(p, "paths", {"corpus", "work_dir"});
    std::string corpus = c.paths.corpus.string();
    std::string work = c.paths.work_dir.string();
    Read(p, "corpus", "paths", &corpus);
    Read(p, "work_dir", "paths", &work);
    c.paths.corpus = corpus;
    c.paths.work_dir = work;
  }
  if (j.contains("preprocess")) {
    const json& p = j["preprocess"];
    RejectUnknown(p, "preprocess",
                  {"strip_comments", "sanitize", "denylist", "train_fraction",
                   "group_by_base"});
    Read(p, "strip_comments", "preprocess", &c.preprocess.strip_comments);
    Read(p, "sanitize", "preprocess", &c.preprocess.sanitize);
    Read(p, "denylist", "preprocess", &c.preprocess.denylist);
    Read(p, "train_fraction", "preprocess", &c.train_fraction);
    Read(p, "group_by_base", "preprocess", &c.group_by_base);
  }
  if (j.contains("model")) {
    const json& m = j["model"];
    RejectUnknown(m, "model",
                  {"d_enc", "m", "p", "threshold", "calibration_fpr",
                   "line_positive_weight", "ae", "gbdt"});
    ModelConfig& mc = c.model;
    Read(m, "d_enc", "model", &mc.d_enc);
    int flag = mc.use_module_embedding ? 1 : 0;
    Read(m, "m", "model", &flag);
    if (flag != 0 && flag != 1) Invalid("model.m", "expected 0 or 1");
    mc.use_module_embedding = flag == 1;
    Read(m, "p", "model", &mc.context_window);
    Read(m, "threshold", "model", &mc.threshold);
    Read(m, "calibration_fpr", "model", &mc.calibration_fpr);
    Read(m, "line_positive_weight", "model", &mc.line_positive_weight);
    if (m.contains("ae")) ReadAe(m["ae"], "model.ae", &mc.ae);
    if (m.contains("gbdt")) ReadGbdt(m["gbdt"], "model.gbdt", &mc.gbdt);
  }
  return c;
}

nlohmann::ordered_json ConfigToJson(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["fixture_bases"] = c.fixture_bases;
  auto& b = j["backend"];
  b["kind"] = c.backend.kind == BackendKind::kReference ? "reference"
                                                        : "remote";
  if (c.backend.seed) {
    b["seed"] = *c.backend.seed;
  } else {
    b["seed"] = nullptr;
  }
  b["d_model"] = c.backend.d_model;
  b["max_tokens"] = c.backend.max_tokens;
  const EndpointConfig& ep = c.backend.endpoint;
  b["endpoint"] = {{"base_url", ep.base_url},
                   {"timeout_ms", ep.timeout_ms},
                   {"max_batch", ep.max_batch},
                   {"retries", ep.retries},
                   {"backoff_ms", ep.backoff_ms},
                   {"concurrency", ep.concurrency}};
  j["paths"] = {{"corpus", c.paths.corpus.string()},
                {"work_dir", c.paths.work_dir.string()}};
  j["preprocess"] = {{"strip_comments", c.preprocess.strip_comments},
                     {"sanitize", c.preprocess.sanitize},
                     {"denylist", c.preprocess.denylist},
                     {"train_fraction", c.train_fraction},
                     {"group_by_base", c.group_by_base}};
  const ModelConfig& m = c.model;
  auto& mj = j["model"];
  mj["d_enc"] = m.d_enc;
  mj["m"] = m.use_module_embedding ? 1 : 0;
  mj["p"] = m.context_window;
  mj["threshold"] = m.threshold;
  mj["calibration_fpr"] = m.calibration_fpr;
  mj["line_positive_weight"] = m.line_positive_weight;
  mj["ae"] = {{"learning_rate", m.ae.learning_rate},
              {"batch_size", m.ae.batch_size},
              {"max_epochs", m.ae.max_epochs},
              {"patience", m.ae.patience},
              {"beta1", m.ae.beta1},
              {"beta2", m.ae.beta2},
              {"epsilon", m.ae.epsilon}};
  mj["gbdt"] = {{"n_trees", m.gbdt.n_trees},
                {"max_depth", m.gbdt.max_depth},
                {"learning_rate", m.gbdt.learning_rate},
                {"lambda", m.gbdt.lambda},
                {"gamma", m.gbdt.gamma},
                {"min_child_weight", m.gbdt.min_child_weight},
                {"positive_class_weight", m.gbdt.positive_class_weight},
                {"growth", m.gbdt.growth == TreeGrowth::kDepthWise
                               ? "depthwise"
                               : "leafwise"},
                {"max_leaves", m.gbdt.max_leaves}};
  return j;
}

void RunConfig::Validate() const {
  if (workers < 1) Invalid("workers", "must be >= 1");
  if (fixture_bases < 1) Invalid("fixture_bases", "must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    Invalid("preprocess.train_fraction", "must be in (0, 1)");
  }
  if (preprocess.sanitize && preprocess.denylist.empty()) {
    Invalid("preprocess.denylist", "must not be empty");
  }
  if (paths.work_dir.empty()) Invalid("paths.work_dir", "must not be empty");
  try {
    if (backend.kind == BackendKind::kReference) {
      BackendDescriptor{"reference", backend.d_model, backend.max_tokens}
          .Validate();
    } else {
      backend.endpoint.Validate();
    }
  } catch (const Error& e) {
    Invalid("backend", e.what());
  }
  // Remote widths are only known after contacting the service.
  const int d_model =
      backend.kind == BackendKind::kReference ? backend.d_model : 1 << 20;
  try {
    EffectiveModel().Validate(d_model);
  } catch (const Error& e) {
    Invalid("model", e.what());
  }
}

ModelConfig RunConfig::EffectiveModel() const {
  ModelConfig m = model;
  m.seed = seed;
  m.workers = workers;
  return m;
}

uint64_t RunConfig::EncoderSeed() const {
  return backend.seed.value_or(DeriveSeed(seed, "encoder"));
}

RunConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIoError, "cannot read config " + path.string());
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    Invalid(path.string(), e.what());
  }
  return ConfigFromJson(j);
}

void ApplyEnvironment(RunConfig& config) {
  if (const char* url = std::getenv("TROJANLOC_ENDPOINT");
      url != nullptr && *url != '\0') {
    config.backend.endpoint.base_url = url;
  }
}

std::unique_ptr<EmbeddingBackend> MakeBackend(const RunConfig& config) {
  if (config.backend.kind == BackendKind::kRemote) {
    return std::make_unique<RemoteBackend>(config.backend.endpoint);
  }
  auto encoder = std::make_shared<ReferenceEncoder>(
      config.EncoderSeed(), config.backend.d_model, config.backend.max_tokens);
  return std::make_unique<PackedBackend>(std::move(encoder));
}

}  // namespace trojanloc
