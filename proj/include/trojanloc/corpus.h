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

#ifndef TROJANLOC_CORPUS_H_
#define TROJANLOC_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trojanloc/align.h"

namespace trojanloc {

enum class TrojanType { kT1 = 0, kT2 = 1, kT3 = 2, kT4 = 3 };
inline constexpr int kNumTrojanTypes = 4;
inline constexpr TrojanType kAllTrojanTypes[kNumTrojanTypes] = {
    TrojanType::kT1, TrojanType::kT2, TrojanType::kT3, TrojanType::kT4};

std::string_view TrojanTypeName(TrojanType type);
std::optional<TrojanType> ParseTrojanType(std::string_view name);

enum class Split { kTrain, kTest };
std::string_view SplitName(Split split);

struct SourceModule {
  std::string id;
  // Identifies the clean ancestor design; a clean module is its own base.
  std::string base_id;
  std::string text;
  std::vector<std::string> lines;

  static SourceModule FromText(std::string id, std::string base_id,
                               std::string text);

  bool operator==(const SourceModule&) const = default;
};

struct LabeledModule {
  SourceModule module;
  bool is_trojan = false;
  std::optional<TrojanType> trojan_type;
  LineMask line_labels;
  Split split = Split::kTrain;

  const std::string& id() const { return module.id; }

  bool operator==(const LabeledModule&) const = default;
};

// Throws kLabelLengthMismatch or kInvalidArgument when the label invariants
// do not hold.
void ValidateRecord(const LabeledModule& record);

struct Corpus {
  std::vector<LabeledModule> records;
  // Free-form metadata: source name, generator seed, notes.
  std::map<std::string, std::string> provenance;

  bool operator==(const Corpus&) const = default;
};

// Checks every record plus id uniqueness.
void ValidateCorpus(const Corpus& corpus);

// Base ids referenced by Trojaned records that have no clean record.
std::vector<std::string> ExternalBases(const Corpus& corpus);

struct SplitOptions {
  double train_fraction = 0.8;
  uint64_t seed = 0;
  bool group_by_base = true;
};

// Deterministic train/test assignment, index-aligned with corpus.records.
// Groups (base ids, or single records when ungrouped) are shuffled and then
// greedily assigned to train while that keeps the train count closest to
// the target.
std::vector<Split> SplitCorpus(const Corpus& corpus,
                               const SplitOptions& options);
void ApplySplit(Corpus& corpus, const SplitOptions& options);

// Line-delimited JSON manifest. An optional first line
// {"provenance": {...}} carries corpus metadata; every other line is one
// record.
Corpus ReadManifest(std::istream& in);
void WriteManifest(const Corpus& corpus, std::ostream& out);
Corpus LoadManifest(const std::filesystem::path& path);
void SaveManifest(const Corpus& corpus, const std::filesystem::path& path);

struct SplitStats {
  int64_t modules = 0;
  int64_t clean_modules = 0;
  int64_t trojan_modules = 0;
  int64_t lines = 0;
  int64_t trojan_lines = 0;
};

struct CorpusStats {
  int64_t base_designs = 0;
  int64_t trojaned_designs = 0;
  SplitStats train;
  SplitStats test;
  double module_clean_fraction = 0.0;
  double module_trojan_fraction = 0.0;
  double line_clean_fraction = 0.0;
  double line_trojan_fraction = 0.0;
  int64_t per_type[kNumTrojanTypes] = {0, 0, 0, 0};
};

CorpusStats ComputeCorpusStats(const Corpus& corpus);
std::string CorpusStatsJson(const CorpusStats& stats);

}  // namespace trojanloc

#endif  // TROJANLOC_CORPUS_H_
