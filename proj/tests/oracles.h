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

#ifndef TROJANLOC_TESTS_ORACLES_H_
#define TROJANLOC_TESTS_ORACLES_H_

// Independent reference computations shared by the unit tests and the
// acceptance binary. Each one is written directly from the defining formula
// with no reuse of the implementation under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <span>
#include <vector>

#include "trojanloc/autoencoder.h"
#include "trojanloc/gbdt.h"
#include "trojanloc/rng.h"

namespace trojanloc::oracle {

// Random d_in -> d_enc -> d_in parameters and a batch, all entries O(1).
inline AeParams RandomAeParams(int d_in, int d_enc, SplitMix64& rng) {
  AeParams p;
  p.w_enc.resize(d_enc, d_in);
  p.b_enc.resize(d_enc);
  p.w_dec.resize(d_in, d_enc);
  p.b_dec.resize(d_in);
  auto fill = [&rng](auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = rng.NextDouble() * 2.0 - 1.0;
    }
  };
  fill(p.w_enc);
  fill(p.b_enc);
  fill(p.w_dec);
  fill(p.b_dec);
  return p;
}

inline RowMatrix RandomBatch(int rows, int cols, SplitMix64& rng) {
  RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = rng.NextDouble() * 2.0 - 1.0;
  }
  return m;
}

// Mean over rows of sum_j (x_j - x_hat_j)^2, evaluated one sample at a time.
inline double DirectAeLoss(const AeParams& p, const RowMatrix& batch) {
  double total = 0.0;
  for (Eigen::Index r = 0; r < batch.rows(); ++r) {
    std::vector<double> h(static_cast<size_t>(p.w_enc.rows()));
    for (Eigen::Index i = 0; i < p.w_enc.rows(); ++i) {
      double a = p.b_enc(i);
      for (Eigen::Index j = 0; j < p.w_enc.cols(); ++j) {
        a += p.w_enc(i, j) * batch(r, j);
      }
      h[static_cast<size_t>(i)] = std::tanh(a);
    }
    for (Eigen::Index j = 0; j < p.w_dec.rows(); ++j) {
      double y = p.b_dec(j);
      for (Eigen::Index i = 0; i < p.w_dec.cols(); ++i) {
        y += p.w_dec(j, i) * h[static_cast<size_t>(i)];
      }
      const double d = batch(r, j) - y;
      total += d * d;
    }
  }
  return total / static_cast<double>(batch.rows());
}

// Largest |analytic - numeric| / max(|analytic|, |numeric|, floor) over every
// parameter, with central differences of step eps. The floor keeps entries
// whose true gradient is essentially zero from dividing roundoff by ~0.
inline double AeGradientMaxRelError(const AeParams& params,
                                    const RowMatrix& batch, double eps = 1e-5,
                                    double floor = 1e-6) {
  const AeGradients g = AeGrad(params, batch);
  double worst = 0.0;
  AeParams q = params;
  auto check = [&](auto& block, const auto& grad_block) {
    for (Eigen::Index i = 0; i < block.size(); ++i) {
      const double saved = block.data()[i];
      block.data()[i] = saved + eps;
      const double up = DirectAeLoss(q, batch);
      block.data()[i] = saved - eps;
      const double down = DirectAeLoss(q, batch);
      block.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = grad_block.data()[i];
      const double denom =
          std::max({std::abs(analytic), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
  };
  check(q.w_enc, g.w_enc);
  check(q.b_enc, g.b_enc);
  check(q.w_dec, g.w_dec);
  check(q.b_dec, g.b_dec);
  return worst;
}

struct BruteSplit {
  bool valid = false;
  double gain = -std::numeric_limits<double>::infinity();
  uint32_t feature = 0;
  float left_max = 0.0f;  // largest feature value sent left
};

// Tries every (feature, distinct value v) partition {x <= v} / {x > v} and
// sums gradients by a direct pass over the rows for each candidate.
inline BruteSplit BruteForceSplit(const FeatureMatrix& x,
                                  std::span<const double> grad,
                                  std::span<const double> hess,
                                  std::span<const uint32_t> rows,
                                  double lambda, double gamma,
                                  double min_child_weight) {
  BruteSplit best;
  for (uint32_t f = 0; f < x.cols(); ++f) {
    std::set<float> values;
    for (uint32_t r : rows) values.insert(x.at(r, f));
    if (values.size() < 2) continue;
    values.erase(std::prev(values.end()));
    for (float v : values) {
      double gl = 0, hl = 0, gr = 0, hr = 0;
      for (uint32_t r : rows) {
        if (x.at(r, f) <= v) {
          gl += grad[r];
          hl += hess[r];
        } else {
          gr += grad[r];
          hr += hess[r];
        }
      }
      if (hl < min_child_weight || hr < min_child_weight) continue;
      const double gain = 0.5 * (gl * gl / (hl + lambda) +
                                 gr * gr / (hr + lambda) -
                                 (gl + gr) * (gl + gr) / (hl + hr + lambda)) -
                          gamma;
      if (gain > best.gain) {
        best = {true, gain, f, v};
      }
    }
  }
  return best;
}

struct Counts {
  int64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

inline Counts CountPairs(std::span<const int> truth, std::span<const int> pred) {
  Counts c;
  for (size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == 1 && pred[i] == 1) ++c.tp;
    if (truth[i] == 0 && pred[i] == 1) ++c.fp;
    if (truth[i] == 0 && pred[i] == 0) ++c.tn;
    if (truth[i] == 1 && pred[i] == 0) ++c.fn;
  }
  return c;
}

inline double SafeDiv(double a, double b) { return b == 0.0 ? 0.0 : a / b; }

// Every (truth, prediction) pair of 0/1 vectors of length 1..max_n, counted
// with bit operations and compared against `metrics(truth, pred)`. Returns
// the number of pairs where any of P, R, F1, accuracy or f1_clean differs by
// more than tol. F1 here is 2TP / (2TP + FP + FN), algebraically equal to
// the harmonic mean.
template <typename MetricsFn>
int64_t ExhaustiveBinaryMismatches(int max_n, MetricsFn&& metrics,
                                   double tol = 1e-12) {
  int64_t mismatches = 0;
  std::vector<int> truth, pred;
  for (int n = 1; n <= max_n; ++n) {
    const uint32_t full = (1u << n) - 1u;
    truth.assign(static_cast<size_t>(n), 0);
    pred.assign(static_cast<size_t>(n), 0);
    for (uint32_t t = 0; t <= full; ++t) {
      for (int i = 0; i < n; ++i) truth[static_cast<size_t>(i)] = (t >> i) & 1;
      for (uint32_t p = 0; p <= full; ++p) {
        for (int i = 0; i < n; ++i) pred[static_cast<size_t>(i)] = (p >> i) & 1;
        const double tp = __builtin_popcount(t & p);
        const double fp = __builtin_popcount(~t & p & full);
        const double fn = __builtin_popcount(t & ~p & full);
        const double tn = __builtin_popcount(~t & ~p & full);
        const auto m = metrics(truth, pred);
        const double want[] = {SafeDiv(tp, tp + fp), SafeDiv(tp, tp + fn),
                               SafeDiv(2 * tp, 2 * tp + fp + fn),
                               (tp + tn) / n,
                               SafeDiv(2 * tn, 2 * tn + fp + fn)};
        const double got[] = {m.precision, m.recall, m.f1, m.accuracy,
                              m.f1_clean};
        for (int k = 0; k < 5; ++k) {
          if (std::abs(want[k] - got[k]) > tol) {
            ++mismatches;
            break;
          }
        }
      }
    }
  }
  return mismatches;
}

}  // namespace trojanloc::oracle

#endif  // TROJANLOC_TESTS_ORACLES_H_
