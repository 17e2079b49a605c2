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

#include "trojanloc/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "trojanloc/error.h"
#include "trojanloc/log.h"

namespace trojanloc {
namespace {

void CheckLengths(size_t a, size_t b) {
  if (a != b) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(a) + " truth labels vs " + std::to_string(b) +
                    " predictions");
  }
}

// num / den, or 0 with *undefined set when den == 0.
double Ratio(double num, double den, bool* undefined) {
  if (den == 0.0) {
    if (undefined != nullptr) *undefined = true;
    return 0.0;
  }
  return num / den;
}

double F1(double p, double r, bool* undefined) {
  return Ratio(2.0 * p * r, p + r, undefined);
}

}  // namespace

ConfusionCounts CountConfusion(std::span<const int> truth,
                               std::span<const int> pred) {
  CheckLengths(truth.size(), pred.size());
  ConfusionCounts c;
  for (size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] != 0;
    const bool p = pred[i] != 0;
    if (t && p) {
      ++c.tp;
    } else if (!t && p) {
      ++c.fp;
    } else if (!t && !p) {
      ++c.tn;
    } else {
      ++c.fn;
    }
  }
  return c;
}

BinaryMetrics MetricsFromCounts(const ConfusionCounts& c) {
  BinaryMetrics m;
  m.counts = c;
  const auto d = [](int64_t v) { return static_cast<double>(v); };
  m.precision = Ratio(d(c.tp), d(c.tp + c.fp), &m.precision_undefined);
  m.recall = Ratio(d(c.tp), d(c.tp + c.fn), &m.recall_undefined);
  m.f1 = F1(m.precision, m.recall, &m.f1_undefined);
  m.accuracy = Ratio(d(c.tp + c.tn), d(c.total()), nullptr);
  // The clean class as positive: its TP is tn, FP is fn, FN is fp.
  const double p_clean = Ratio(d(c.tn), d(c.tn + c.fn), nullptr);
  const double r_clean = Ratio(d(c.tn), d(c.tn + c.fp), nullptr);
  m.f1_clean = F1(p_clean, r_clean, nullptr);
  if (m.precision_undefined || m.recall_undefined || m.f1_undefined) {
    LogDebug("binary metrics hit a 0/0 case; reported as 0");
  }
  return m;
}

BinaryMetrics ComputeBinaryMetrics(std::span<const int> truth,
                                   std::span<const int> pred) {
  return MetricsFromCounts(CountConfusion(truth, pred));
}

MacroMetrics ComputeMacroMetrics(std::span<const int> truth,
                                 std::span<const int> pred, int num_classes) {
  CheckLengths(truth.size(), pred.size());
  if (num_classes < 1) {
    throw Error(ErrorCode::kInvalidArgument, "num_classes must be >= 1");
  }
  const auto k = static_cast<size_t>(num_classes);
  MacroMetrics m;
  m.confusion.assign(k, std::vector<int64_t>(k, 0));
  for (size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= num_classes || pred[i] < 0 ||
        pred[i] >= num_classes) {
      throw Error(ErrorCode::kInvalidArgument, "label out of range");
    }
    ++m.confusion[static_cast<size_t>(truth[i])][static_cast<size_t>(pred[i])];
  }
  int64_t trace = 0;
  for (size_t c = 0; c < k; ++c) {
    int64_t tp = m.confusion[c][c];
    int64_t predicted = 0;
    int64_t actual = 0;
    for (size_t o = 0; o < k; ++o) {
      predicted += m.confusion[o][c];
      actual += m.confusion[c][o];
    }
    trace += tp;
    ClassMetrics cm;
    cm.support = actual;
    cm.precision = Ratio(static_cast<double>(tp),
                         static_cast<double>(predicted), nullptr);
    cm.recall =
        Ratio(static_cast<double>(tp), static_cast<double>(actual), nullptr);
    cm.f1 = F1(cm.precision, cm.recall, nullptr);
    m.precision_macro += cm.precision;
    m.recall_macro += cm.recall;
    m.f1_macro += cm.f1;
    m.per_class.push_back(cm);
  }
  m.precision_macro /= static_cast<double>(k);
  m.recall_macro /= static_cast<double>(k);
  m.f1_macro /= static_cast<double>(k);
  m.accuracy = Ratio(static_cast<double>(trace),
                     static_cast<double>(truth.size()), nullptr);
  return m;
}

std::vector<size_t> RankByScore(std::span<const double> scores) {
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return scores[a] > scores[b];
  });
  return order;
}

size_t TopCount(size_t n, double k_percent) {
  // Small epsilon keeps exact products such as 10% of 40 at 4, not 5.
  const double raw = k_percent * static_cast<double>(n) / 100.0;
  return std::min(n, static_cast<size_t>(std::ceil(raw - 1e-9)));
}

double TopFractionCoverage(std::span<const double> scores,
                           std::span<const int> truth, double k_percent) {
  CheckLengths(truth.size(), scores.size());
  if (!(k_percent > 0.0 && k_percent <= 100.0)) {
    throw Error(ErrorCode::kInvalidArgument, "k_percent must be in (0, 100]");
  }
  const size_t positives = static_cast<size_t>(
      std::count_if(truth.begin(), truth.end(), [](int t) { return t != 0; }));
  if (positives == 0) return 0.0;
  const auto order = RankByScore(scores);
  const size_t top = TopCount(scores.size(), k_percent);
  size_t covered = 0;
  for (size_t i = 0; i < top; ++i) covered += truth[order[i]] != 0;
  return static_cast<double>(covered) / static_cast<double>(positives);
}

}  // namespace trojanloc
