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

#include "trojanloc/corpus.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "trojanloc/binary_io.h"
#include "trojanloc/error.h"
#include "trojanloc/rng.h"
#include "trojanloc/text.h"

namespace trojanloc {

using ordered_json = nlohmann::ordered_json;

std::string_view TrojanTypeName(TrojanType type) {
  switch (type) {
    case TrojanType::kT1: return "T1";
    case TrojanType::kT2: return "T2";
    case TrojanType::kT3: return "T3";
    case TrojanType::kT4: return "T4";
  }
  return "?";
}

std::optional<TrojanType> ParseTrojanType(std::string_view name) {
  for (TrojanType t : kAllTrojanTypes) {
    if (TrojanTypeName(t) == name) return t;
  }
  return std::nullopt;
}

std::string_view SplitName(Split split) {
  return split == Split::kTrain ? "train" : "test";
}

SourceModule SourceModule::FromText(std::string id, std::string base_id,
                                    std::string text) {
  SourceModule m;
  m.id = std::move(id);
  m.base_id = std::move(base_id);
  m.lines = SplitLines(text);
  m.text = std::move(text);
  return m;
}

void ValidateRecord(const LabeledModule& record) {
  const auto& id = record.id();
  if (record.line_labels.size() != record.module.lines.size()) {
    throw Error(ErrorCode::kLabelLengthMismatch,
                id + ": " + std::to_string(record.line_labels.size()) +
                    " labels for " +
                    std::to_string(record.module.lines.size()) + " lines");
  }
  const auto positives =
      std::count(record.line_labels.begin(), record.line_labels.end(), 1);
  for (uint8_t l : record.line_labels) {
    if (l > 1) throw Error(ErrorCode::kInvalidArgument, id + ": label > 1");
  }
  if (record.is_trojan) {
    if (!record.trojan_type) {
      throw Error(ErrorCode::kInvalidArgument, id + ": Trojan without type");
    }
    if (positives == 0) {
      throw Error(ErrorCode::kInvalidArgument, id + ": Trojan without lines");
    }
  } else {
    if (record.trojan_type) {
      throw Error(ErrorCode::kInvalidArgument, id + ": clean module has type");
    }
    if (positives != 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  id + ": clean module has Trojan lines");
    }
  }
}

void ValidateCorpus(const Corpus& corpus) {
  std::set<std::string_view> ids;
  for (const auto& r : corpus.records) {
    ValidateRecord(r);
    if (!ids.insert(r.id()).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate id " + r.id());
    }
  }
}

std::vector<std::string> ExternalBases(const Corpus& corpus) {
  std::set<std::string> clean;
  for (const auto& r : corpus.records) {
    if (!r.is_trojan) clean.insert(r.module.base_id);
  }
  std::set<std::string> missing;
  for (const auto& r : corpus.records) {
    if (r.is_trojan && !clean.count(r.module.base_id)) {
      missing.insert(r.module.base_id);
    }
  }
  return {missing.begin(), missing.end()};
}

std::vector<Split> SplitCorpus(const Corpus& corpus,
                               const SplitOptions& options) {
  if (corpus.records.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "cannot split an empty corpus");
  }
  if (!(options.train_fraction > 0.0 && options.train_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "train_fraction must lie in (0, 1)");
  }
  // Groups in order of first appearance, so the shuffle input is fixed.
  std::vector<std::vector<size_t>> groups;
  std::unordered_map<std::string, size_t> group_of;
  for (size_t i = 0; i < corpus.records.size(); ++i) {
    if (!options.group_by_base) {
      groups.push_back({i});
      continue;
    }
    const auto& base = corpus.records[i].module.base_id;
    auto [it, inserted] = group_of.emplace(base, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  std::vector<size_t> order(groups.size());
  for (size_t g = 0; g < order.size(); ++g) order[g] = g;
  SplitMix64 rng(DeriveSeed(options.seed, "split"));
  Shuffle(order, rng);

  const double target =
      options.train_fraction * static_cast<double>(corpus.records.size());
  std::vector<Split> assignment(corpus.records.size(), Split::kTest);
  double train = 0.0;
  for (size_t g : order) {
    const double size = static_cast<double>(groups[g].size());
    if (std::abs(train + size - target) < std::abs(train - target)) {
      train += size;
      for (size_t i : groups[g]) assignment[i] = Split::kTrain;
    }
  }
  return assignment;
}

void ApplySplit(Corpus& corpus, const SplitOptions& options) {
  const auto assignment = SplitCorpus(corpus, options);
  for (size_t i = 0; i < assignment.size(); ++i) {
    corpus.records[i].split = assignment[i];
  }
}

namespace {

ordered_json RecordToJson(const LabeledModule& r) {
  ordered_json j;
  j["id"] = r.module.id;
  j["base_id"] = r.module.base_id;
  j["label"] = r.is_trojan ? 1 : 0;
  if (r.trojan_type) {
    j["trojan_type"] = std::string(TrojanTypeName(*r.trojan_type));
  } else {
    j["trojan_type"] = nullptr;
  }
  j["split"] = std::string(SplitName(r.split));
  j["source"] = r.module.text;
  ordered_json labels = ordered_json::array();
  for (uint8_t l : r.line_labels) labels.push_back(static_cast<int>(l));
  j["line_labels"] = std::move(labels);
  return j;
}

LabeledModule RecordFromJson(const ordered_json& j, int64_t line_no) {
  auto malformed = [line_no](const std::string& why) {
    return Error(ErrorCode::kMalformedRecord,
                 "line " + std::to_string(line_no) + ": " + why, line_no);
  };
  if (!j.is_object()) throw malformed("record is not an object");
  for (const char* key : {"id", "base_id", "label", "trojan_type", "split",
                          "source", "line_labels"}) {
    if (!j.contains(key)) throw malformed(std::string("missing ") + key);
  }
  LabeledModule r;
  try {
    r.module = SourceModule::FromText(j.at("id").get<std::string>(),
                                      j.at("base_id").get<std::string>(),
                                      j.at("source").get<std::string>());
    const int label = j.at("label").get<int>();
    if (label != 0 && label != 1) throw malformed("label must be 0 or 1");
    r.is_trojan = label == 1;
    const auto& type = j.at("trojan_type");
    if (!type.is_null()) {
      r.trojan_type = ParseTrojanType(type.get<std::string>());
      if (!r.trojan_type) throw malformed("unknown trojan_type");
    }
    const auto split = j.at("split").get<std::string>();
    if (split == "train") {
      r.split = Split::kTrain;
    } else if (split == "test") {
      r.split = Split::kTest;
    } else {
      throw malformed("split must be train or test");
    }
    for (const auto& l : j.at("line_labels")) {
      const int v = l.get<int>();
      if (v != 0 && v != 1) throw malformed("line label must be 0 or 1");
      r.line_labels.push_back(static_cast<uint8_t>(v));
    }
  } catch (const nlohmann::json::exception& e) {
    throw malformed(e.what());
  }
  ValidateRecord(r);
  return r;
}

}  // namespace

Corpus ReadManifest(std::istream& in) {
  Corpus corpus;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kMalformedRecord,
                  "line " + std::to_string(line_no) + ": " + e.what(),
                  line_no);
    }
    if (line_no == 1 && j.is_object() && j.size() == 1 &&
        j.contains("provenance")) {
      for (const auto& [k, v] : j["provenance"].items()) {
        corpus.provenance[k] = v.is_string() ? v.get<std::string>() : v.dump();
      }
      continue;
    }
    corpus.records.push_back(RecordFromJson(j, line_no));
  }
  ValidateCorpus(corpus);
  return corpus;
}

void WriteManifest(const Corpus& corpus, std::ostream& out) {
  if (!corpus.provenance.empty()) {
    ordered_json header;
    header["provenance"] = ordered_json::object();
    for (const auto& [k, v] : corpus.provenance) header["provenance"][k] = v;
    out << header.dump() << '\n';
  }
  for (const auto& r : corpus.records) out << RecordToJson(r).dump() << '\n';
}

Corpus LoadManifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return ReadManifest(in);
}

void SaveManifest(const Corpus& corpus, const std::filesystem::path& path) {
  std::ostringstream out;
  WriteManifest(corpus, out);
  WriteFileBytes(path, out.str());
}

CorpusStats ComputeCorpusStats(const Corpus& corpus) {
  CorpusStats s;
  std::set<std::string> bases;
  int64_t lines = 0;
  int64_t trojan_lines = 0;
  for (const auto& r : corpus.records) {
    SplitStats& split = r.split == Split::kTrain ? s.train : s.test;
    const int64_t n = static_cast<int64_t>(r.module.lines.size());
    const int64_t pos =
        std::count(r.line_labels.begin(), r.line_labels.end(), 1);
    ++split.modules;
    split.lines += n;
    split.trojan_lines += pos;
    lines += n;
    trojan_lines += pos;
    if (r.is_trojan) {
      ++split.trojan_modules;
      ++s.trojaned_designs;
      if (r.trojan_type) ++s.per_type[static_cast<int>(*r.trojan_type)];
    } else {
      ++split.clean_modules;
      bases.insert(r.module.base_id);
    }
  }
  s.base_designs = static_cast<int64_t>(bases.size());
  const auto modules = static_cast<int64_t>(corpus.records.size());
  if (modules > 0) {
    s.module_trojan_fraction =
        static_cast<double>(s.trojaned_designs) / static_cast<double>(modules);
    s.module_clean_fraction =
        static_cast<double>(modules - s.trojaned_designs) /
        static_cast<double>(modules);
  }
  if (lines > 0) {
    s.line_trojan_fraction =
        static_cast<double>(trojan_lines) / static_cast<double>(lines);
    s.line_clean_fraction = static_cast<double>(lines - trojan_lines) /
                            static_cast<double>(lines);
  }
  return s;
}

std::string CorpusStatsJson(const CorpusStats& s) {
  auto split = [](const SplitStats& x) {
    ordered_json j;
    j["modules"] = x.modules;
    j["clean_modules"] = x.clean_modules;
    j["trojan_modules"] = x.trojan_modules;
    j["lines"] = x.lines;
    j["trojan_lines"] = x.trojan_lines;
    return j;
  };
  ordered_json j;
  j["base_designs"] = s.base_designs;
  j["trojaned_designs"] = s.trojaned_designs;
  j["train"] = split(s.train);
  j["test"] = split(s.test);
  j["module_clean_fraction"] = s.module_clean_fraction;
  j["module_trojan_fraction"] = s.module_trojan_fraction;
  j["line_clean_fraction"] = s.line_clean_fraction;
  j["line_trojan_fraction"] = s.line_trojan_fraction;
  ordered_json types;
  for (TrojanType t : kAllTrojanTypes) {
    types[std::string(TrojanTypeName(t))] = s.per_type[static_cast<int>(t)];
  }
  j["per_type"] = std::move(types);
  return j.dump(2);
}

}  // namespace trojanloc
