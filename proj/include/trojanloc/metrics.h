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

#ifndef TROJANLOC_METRICS_H_
#define TROJANLOC_METRICS_H_

// Classification metrics. Label 1 is the Trojan (positive) class in binary
// tasks. Every 0/0 ratio evaluates to 0 and raises the matching flag.

#include <cstdint>
#include <span>
#include <vector>

namespace trojanloc {

struct ConfusionCounts {
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t tn = 0;
  int64_t fn = 0;

  int64_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

// Errors: kLengthMismatch.
ConfusionCounts CountConfusion(std::span<const int> truth,
                               std::span<const int> pred);

struct BinaryMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  // F1 with the clean class (label 0) taken as positive.
  double f1_clean = 0.0;
  ConfusionCounts counts;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;

  // Mean of f1_clean and f1.
  double f1_macro() const { return 0.5 * (f1 + f1_clean); }
};

BinaryMetrics MetricsFromCounts(const ConfusionCounts& counts);
BinaryMetrics ComputeBinaryMetrics(std::span<const int> truth,
                                   std::span<const int> pred);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int64_t support = 0;
};

struct MacroMetrics {
  double accuracy = 0.0;
  double precision_macro = 0.0;
  double recall_macro = 0.0;
  double f1_macro = 0.0;
  std::vector<ClassMetrics> per_class;
  // confusion[t][p] counts truth t predicted as p.
  std::vector<std::vector<int64_t>> confusion;
};

// Labels must lie in [0, num_classes). Errors: kLengthMismatch,
// kInvalidArgument.
MacroMetrics ComputeMacroMetrics(std::span<const int> truth,
                                 std::span<const int> pred, int num_classes);

// Line indices by descending score; equal scores keep ascending index.
std::vector<size_t> RankByScore(std::span<const double> scores);

// Fraction of truth-positive lines ranked within the top ceil(k% * N)
// positions. Returns 0 when there are no positives. Errors:
// kLengthMismatch, kInvalidArgument (k outside (0, 100]).
double TopFractionCoverage(std::span<const double> scores,
                           std::span<const int> truth, double k_percent);

// Number of ranked positions inspected at k percent of n lines.
size_t TopCount(size_t n, double k_percent);

}  // namespace trojanloc

#endif  // TROJANLOC_METRICS_H_
