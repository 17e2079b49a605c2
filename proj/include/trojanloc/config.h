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

#ifndef TROJANLOC_CONFIG_H_
#define TROJANLOC_CONFIG_H_

// Run configuration shared by every CLI stage, stored as a JSON document.
// Missing keys keep their defaults; unknown keys are rejected so typos do not
// silently fall back.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"
#include "trojanloc/embed.h"
#include "trojanloc/embed_client.h"
#include "trojanloc/pipeline.h"

namespace trojanloc {

enum class BackendKind { kReference, kRemote };

struct BackendConfig {
  BackendKind kind = BackendKind::kReference;
  // Reference encoder seed; derived from the run seed when unset.
  std::optional<uint64_t> seed;
  int d_model = 64;
  int max_tokens = 512;
  EndpointConfig endpoint;
};

struct PathConfig {
  // Raw input manifest (the fixtures stage writes it).
  std::filesystem::path corpus = "corpus.jsonl";
  // Every derived artifact lives here.
  std::filesystem::path work_dir = "work";
};

struct RunConfig {
  uint64_t seed = 0;
  int workers = 1;
  BackendConfig backend;
  PathConfig paths;
  PreprocessOptions preprocess;
  double train_fraction = 0.8;
  bool group_by_base = true;
  // Fixture generation.
  int fixture_bases = 200;
  ModelConfig model;

  // Throws kConfigInvalid naming the offending field.
  void Validate() const;
  // The model config with run-level seed and worker count applied.
  ModelConfig EffectiveModel() const;
  uint64_t EncoderSeed() const;
};

RunConfig ConfigFromJson(const nlohmann::json& j);
nlohmann::ordered_json ConfigToJson(const RunConfig& config);
// Errors: kIoError, kConfigInvalid.
RunConfig LoadConfig(const std::filesystem::path& path);

// Replaces the remote base URL with $TROJANLOC_ENDPOINT when it is set.
void ApplyEnvironment(RunConfig& config);

std::unique_ptr<EmbeddingBackend> MakeBackend(const RunConfig& config);

}  // namespace trojanloc

#endif  // TROJANLOC_CONFIG_H_
