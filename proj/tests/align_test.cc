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

#include <string>
#include <vector>

#include "trojanloc/align.h"
#include "trojanloc/rng.h"

namespace trojanloc {
namespace {

using Lines = std::vector<std::string>;

LineMask Align(const Lines& a, const Lines& b) { return AlignLineLabels(a, b); }

TEST(AlignLineLabels, Identity) {
  EXPECT_EQ(Align({"a", "b"}, {"a", "b"}), (LineMask{0, 0}));
}

TEST(AlignLineLabels, PureInsertion) {
  EXPECT_EQ(Align({"a", "b"}, {"a", "X", "b"}), (LineMask{0, 1, 0}));
}

TEST(AlignLineLabels, ModificationAndAppend) {
  EXPECT_EQ(Align({"a", "b", "c"}, {"a", "B2", "c", "d"}),
            (LineMask{0, 1, 0, 1}));
}

TEST(AlignLineLabels, EmptyInputs) {
  EXPECT_EQ(Align({}, {"a"}), (LineMask{1}));
  EXPECT_EQ(Align({"a"}, {}), LineMask{});
}

TEST(AlignLineLabels, InsertedDuplicateOfHostLineIsStillLabeled) {
  // The inserted block repeats "end"; the clean "end" must stay matched to a
  // single line and exactly one copy is labeled.
  const auto mask = Align({"a", "end"}, {"a", "end", "end"});
  EXPECT_EQ(mask[0], 0);
  EXPECT_EQ(mask[1] + mask[2], 1);
}

// Largest number of trojan positions that can be matched, by enumerating
// every subset of trojan lines and testing subsequence membership.
size_t BruteLcs(const Lines& clean, const Lines& trojan) {
  const size_t m = trojan.size();
  size_t best = 0;
  for (uint32_t mask = 0; mask < (1u << m); ++mask) {
    size_t ci = 0;
    size_t taken = 0;
    bool ok = true;
    for (size_t j = 0; j < m && ok; ++j) {
      if (!(mask >> j & 1u)) continue;
      while (ci < clean.size() && clean[ci] != trojan[j]) ++ci;
      if (ci == clean.size()) ok = false;
      ++ci;
      ++taken;
    }
    if (ok) best = std::max(best, taken);
  }
  return best;
}

bool IsCommonSubsequence(const Lines& clean, const Lines& trojan,
                         const LineMask& mask) {
  size_t ci = 0;
  for (size_t j = 0; j < trojan.size(); ++j) {
    if (mask[j] != 0) continue;
    while (ci < clean.size() && clean[ci] != trojan[j]) ++ci;
    if (ci == clean.size()) return false;
    ++ci;
  }
  return true;
}

TEST(AlignLineLabels, MatchesExhaustiveLcsOracle) {
  SplitMix64 rng(99);
  const Lines alphabet = {"a", "b", "c", "d"};
  for (int trial = 0; trial < 3000; ++trial) {
    Lines clean(rng.NextBelow(11));
    Lines trojan(rng.NextBelow(11));
    for (auto& l : clean) l = alphabet[rng.NextBelow(alphabet.size())];
    for (auto& l : trojan) l = alphabet[rng.NextBelow(alphabet.size())];
    const LineMask mask = Align(clean, trojan);
    ASSERT_EQ(mask.size(), trojan.size());
    size_t matched = 0;
    for (auto v : mask) matched += v == 0;
    ASSERT_EQ(matched, BruteLcs(clean, trojan));
    ASSERT_TRUE(IsCommonSubsequence(clean, trojan, mask));
  }
}

TEST(AlignLineLabels, ContiguousInsertionRecoveredExactly) {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    Lines clean(1 + rng.NextBelow(20));
    for (size_t i = 0; i < clean.size(); ++i) {
      clean[i] = "l" + std::to_string(rng.NextBelow(6));
    }
    const size_t at = rng.NextBelow(clean.size() + 1);
    const size_t k = 1 + rng.NextBelow(4);
    Lines trojan(clean.begin(), clean.begin() + at);
    LineMask truth(at, 0);
    for (size_t i = 0; i < k; ++i) {
      trojan.push_back("new" + std::to_string(i));
      truth.push_back(1);
    }
    trojan.insert(trojan.end(), clean.begin() + at, clean.end());
    truth.insert(truth.end(), clean.size() - at, 0);
    ASSERT_EQ(Align(clean, trojan), truth);
  }
}

}  // namespace
}  // namespace trojanloc
