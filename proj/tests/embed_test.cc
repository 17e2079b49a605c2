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

#include <cmath>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "trojanloc/embed.h"
#include "trojanloc/error.h"
#include "trojanloc/fixtures.h"
#include "trojanloc/log.h"
#include "trojanloc/rng.h"

namespace trojanloc {
namespace {

using Tokens = std::vector<std::string>;

double Dot(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double MaxAbsDiff(const Vector& a, const Vector& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

SegmentedBatch Batch(const std::vector<Tokens>& segments) {
  SegmentedBatch b;
  for (const auto& s : segments) {
    const size_t begin = b.tokens.size();
    b.tokens.insert(b.tokens.end(), s.begin(), s.end());
    b.segments.push_back({begin, b.tokens.size()});
  }
  return b;
}

TEST(Tokenize, Examples) {
  EXPECT_EQ(Tokenize("assign y = a&b;").tokens,
            (Tokens{"assign", "y", "=", "a", "&", "b", ";"}));
  EXPECT_EQ(Tokenize("").tokens, Tokens{std::string(kEmptyToken)});
  EXPECT_EQ(Tokenize(" \t ").tokens, Tokens{std::string(kEmptyToken)});
  EXPECT_EQ(Tokenize("clk").tokens, Tokens{"clk"});
  EXPECT_EQ(Tokenize("q$1 <= 8'hFF;").tokens,
            (Tokens{"q$1", "<", "=", "8", "'", "hFF", ";"}));
}

TEST(Tokenize, NoEmptyTokens) {
  SplitMix64 rng(3);
  for (int i = 0; i < 500; ++i) {
    std::string s;
    for (uint64_t k = rng.NextBelow(20); k > 0; --k) {
      s.push_back(static_cast<char>(32 + rng.NextBelow(95)));
    }
    for (const auto& t : Tokenize(s).tokens) EXPECT_FALSE(t.empty());
  }
}

TEST(BackendDescriptor, Validation) {
  EXPECT_NO_THROW((BackendDescriptor{"r", 1, 8}.Validate()));
  EXPECT_THROW((BackendDescriptor{"r", 0, 8}.Validate()), Error);
  EXPECT_THROW((BackendDescriptor{"r", 4, 7}.Validate()), Error);
}

TEST(RefTokenVector, DeterministicUnitNorm) {
  const Vector a = RefTokenVector("clk", 5, 64);
  EXPECT_EQ(a, RefTokenVector("clk", 5, 64));
  EXPECT_NEAR(std::sqrt(Dot(a, a)), 1.0, 1e-9);
  EXPECT_NE(a, RefTokenVector("clk", 6, 64));
}

TEST(RefTokenVector, DistinctTokensNearlyOrthogonal) {
  int below = 0;
  const int pairs = 10000;
  for (int i = 0; i < pairs; ++i) {
    const Vector a = RefTokenVector("t" + std::to_string(2 * i), 1, 64);
    const Vector b = RefTokenVector("t" + std::to_string(2 * i + 1), 1, 64);
    below += Dot(a, b) < 0.5;
  }
  EXPECT_GE(static_cast<double>(below) / pairs, 0.99);
}

TEST(RefContextualEncode, SingleTokenIsTokenVector) {
  const auto e = RefContextualEncode(Batch({{"x"}}), 9, 16);
  EXPECT_LE(MaxAbsDiff(e[0], RefTokenVector("x", 9, 16)), 1e-15);
}

TEST(RefContextualEncode, RepeatedTokenStaysColinear) {
  const auto e = RefContextualEncode(Batch({{"x", "x"}}), 9, 16);
  EXPECT_LE(MaxAbsDiff(e[1], RefTokenVector("x", 9, 16)), 1e-12);
}

TEST(RefContextualEncode, HandComputedWeights) {
  const auto e = RefContextualEncode(Batch({{"a", "b", "c"}}), 2, 8);
  const Vector va = RefTokenVector("a", 2, 8);
  const Vector vb = RefTokenVector("b", 2, 8);
  const Vector vc = RefTokenVector("c", 2, 8);
  Vector want(8);
  for (size_t i = 0; i < 8; ++i) want[i] = vc[i] + vb[i] / 2 + va[i] / 3;
  const double n = std::sqrt(Dot(want, want));
  for (double& x : want) x /= n;
  EXPECT_LE(MaxAbsDiff(e[2], want), 1e-12);
}

TEST(RefContextualEncode, PackedEqualsSeparate) {
  const auto packed =
      RefContextualEncode(Batch({{"a", "b", "c"}, {"d", "a"}}), 4, 32);
  const auto first = RefContextualEncode(Batch({{"a", "b", "c"}}), 4, 32);
  const auto second = RefContextualEncode(Batch({{"d", "a"}}), 4, 32);
  for (size_t k = 0; k < 3; ++k) EXPECT_EQ(packed[k], first[k]);
  for (size_t k = 0; k < 2; ++k) EXPECT_EQ(packed[3 + k], second[k]);
}

TEST(RefContextualEncode, MaskAndCausalityUnderPerturbation) {
  SplitMix64 rng(31);
  const ReferenceEncoder enc(31, 16, 64);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Tokens> segs(1 + rng.NextBelow(4));
    for (auto& s : segs) {
      s.resize(1 + rng.NextBelow(6));
      for (auto& t : s) t = "w" + std::to_string(rng.NextBelow(20));
    }
    SegmentedBatch batch = Batch(segs);
    const auto base = enc.Encode(batch);
    const size_t pos = rng.NextBelow(batch.tokens.size());
    SegmentedBatch changed = batch;
    changed.tokens[pos] = "zz" + std::to_string(trial);
    const auto after = enc.Encode(changed);
    for (size_t k = 0; k < base.size(); ++k) {
      // Unchanged unless position k is allowed to see the perturbed token.
      if (!batch.Allows(k, pos)) {
        ASSERT_EQ(base[k], after[k]);
      }
    }
    ASSERT_NE(base[pos], after[pos]);
  }
}

TEST(SegmentedBatch, ValidateAndAllows) {
  SegmentedBatch b = Batch({{"a", "b"}, {"c"}});
  EXPECT_NO_THROW(b.Validate());
  EXPECT_TRUE(b.Allows(1, 0));
  EXPECT_FALSE(b.Allows(0, 1));
  EXPECT_FALSE(b.Allows(2, 1));
  b.segments[1].end = 2;
  EXPECT_THROW(b.Validate(), Error);
}

TEST(MeanPool, Examples) {
  const std::vector<Vector> one = {{1.5, -2.0}};
  EXPECT_EQ(MeanPool(one, 0, 1), one[0]);
  const std::vector<Vector> two = {{1, 0}, {0, 1}};
  EXPECT_EQ(MeanPool(two, 0, 2), (Vector{0.5, 0.5}));
  EXPECT_THROW(MeanPool(two, 1, 1), Error);
}

TEST(MeanPool, Linearity) {
  const std::vector<Vector> e = {{1, 2, 3}, {4, 5, 6.5}};
  std::vector<Vector> scaled = e;
  for (auto& v : scaled) {
    for (auto& x : v) x *= 3.0;
  }
  const Vector a = MeanPool(e, 0, 2);
  const Vector b = MeanPool(scaled, 0, 2);
  for (size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(b[i], 3 * a[i], 1e-12);
}

TEST(MeanPool, WidthFollowsBackend) {
  const ReferenceEncoder enc(1, 128, 64);
  EXPECT_EQ(EmbedModule(enc, "assign y = a;").size(), 128u);
}

TEST(EmbedModule, ShortTextIsSinglePassMean) {
  const ReferenceEncoder enc(2, 16, 64);
  const std::string text = "assign y = a & b;";
  SegmentedBatch b;
  b.tokens = Tokenize(text).tokens;
  b.segments.push_back({0, b.tokens.size()});
  const auto embs = enc.Encode(b);
  EXPECT_LE(MaxAbsDiff(EmbedModule(enc, text), MeanPool(embs, 0, embs.size())),
            1e-15);
}

TEST(EmbedModule, EqualChunksAverage) {
  const ReferenceEncoder enc(2, 16, 8);
  Tokens all;
  for (int i = 0; i < 16; ++i) all.push_back("t" + std::to_string(i % 5));
  std::string text;
  for (const auto& t : all) text += t + " ";
  const auto c1 = enc.Encode(Batch({Tokens(all.begin(), all.begin() + 8)}));
  const auto c2 = enc.Encode(Batch({Tokens(all.begin() + 8, all.end())}));
  const Vector m1 = MeanPool(c1, 0, 8);
  const Vector m2 = MeanPool(c2, 0, 8);
  const Vector got = EmbedModule(enc, text);
  for (size_t i = 0; i < got.size(); ++i) {
    EXPECT_NEAR(got[i], 0.5 * (m1[i] + m2[i]), 1e-12);
  }
}

TEST(EmbedModule, UnequalChunksGiveGlobalTokenMean) {
  const ReferenceEncoder enc(3, 16, 8);
  Tokens all;
  for (int i = 0; i < 21; ++i) all.push_back("u" + std::to_string(i % 7));
  std::string text;
  for (const auto& t : all) text += t + " ";
  // Oracle: collect every chunk-local embedding and average them directly.
  std::vector<Vector> every;
  for (size_t s = 0; s < all.size(); s += 8) {
    const size_t e = std::min(all.size(), s + 8);
    const auto embs = enc.Encode(Batch({Tokens(all.begin() + s, all.begin() + e)}));
    every.insert(every.end(), embs.begin(), embs.end());
  }
  EXPECT_LE(MaxAbsDiff(EmbedModule(enc, text),
                       MeanPool(every, 0, every.size())),
            1e-12);
}

TEST(PackLines, GreedyFill) {
  const std::vector<TokenSeq> lines = {{{"a", "b", "c"}},
                                       {{"d", "e", "f"}},
                                       {{"g", "h", "i"}}};
  const auto batches = PackLines(lines, 8);
  ASSERT_EQ(batches.size(), 2u);
  EXPECT_EQ(batches[0].segments.size(), 2u);
  EXPECT_EQ(batches[1].segments.size(), 1u);
}

TEST(PackLines, SingleLine) {
  const std::vector<TokenSeq> lines = {{{"a"}}};
  const auto batches = PackLines(lines, 8);
  ASSERT_EQ(batches.size(), 1u);
  EXPECT_EQ(batches[0].segments.size(), 1u);
}

TEST(PackLines, OrderPreservingPartition) {
  SplitMix64 rng(8);
  std::vector<TokenSeq> lines(500);
  for (size_t i = 0; i < lines.size(); ++i) {
    for (uint64_t k = 1 + rng.NextBelow(12); k > 0; --k) {
      lines[i].tokens.push_back("l" + std::to_string(i) + "_" +
                                std::to_string(k));
    }
  }
  const auto batches = PackLines(lines, 32);
  size_t next = 0;
  for (const auto& b : batches) {
    EXPECT_LE(b.tokens.size(), 32u);
    b.Validate();
    for (const auto& s : b.segments) {
      ASSERT_LT(next, lines.size());
      const Tokens got(b.tokens.begin() + s.begin, b.tokens.begin() + s.end);
      EXPECT_EQ(got, lines[next].tokens);
      ++next;
    }
  }
  EXPECT_EQ(next, lines.size());
}

TEST(PackLines, TruncatesOverlongLineWithWarning) {
  std::vector<TokenSeq> lines(1);
  for (int i = 0; i < 12; ++i) lines[0].tokens.push_back("x");
  int warnings = 0;
  auto prev = SetLogSink([&](LogLevel l, std::string_view) {
    warnings += l == LogLevel::kWarning;
  });
  const auto batches = PackLines(lines, 8);
  SetLogSink(prev);
  EXPECT_EQ(warnings, 1);
  EXPECT_EQ(batches.at(0).tokens.size(), 8u);
}

TEST(EmbedLines, SingleLineEqualsModule) {
  const ReferenceEncoder enc(5, 32, 64);
  const std::vector<std::string> lines = {"assign y = a;"};
  EXPECT_LE(MaxAbsDiff(EmbedLines(enc, lines)[0], EmbedModule(enc, lines[0])),
            1e-12);
}

TEST(EmbedLines, PackedMatchesPerLineOnFixtureModule) {
  const ReferenceEncoder enc(6, 64, 64);
  const SourceModule m = GenerateCleanModule(3, {20, 20});
  const auto packed = EmbedLines(enc, m.lines);
  ASSERT_EQ(packed.size(), m.lines.size());
  for (size_t i = 0; i < m.lines.size(); ++i) {
    EXPECT_LE(MaxAbsDiff(packed[i], EmbedModule(enc, m.lines[i])), 1e-9);
  }
}

TEST(EmbedLines, IdenticalLinesIdenticalEmbeddings) {
  const ReferenceEncoder enc(6, 16, 64);
  const std::vector<std::string> lines = {"x = y;", "z;", "x = y;"};
  const auto e = EmbedLines(enc, lines);
  EXPECT_EQ(e[0], e[2]);
}

class FailingEncoder final : public TokenEncoder {
 public:
  BackendDescriptor Describe() const override { return {"f", 4, 8}; }
  TokenSeq TokenizeText(std::string_view t) const override {
    return Tokenize(t);
  }
  std::vector<Vector> Encode(const SegmentedBatch& b) const override {
    for (const auto& t : b.tokens) {
      if (t == "boom") throw std::runtime_error("device lost");
    }
    return std::vector<Vector>(b.tokens.size(), Vector(4, 0.25));
  }
};

TEST(EmbedLines, BackendFailureCarriesBatchIndex) {
  const FailingEncoder enc;
  // max_tokens 8 packs these as {0}, {1, 2}.
  const std::vector<std::string> lines = {"a b c d e", "f g h i", "boom"};
  try {
    EmbedLines(enc, lines);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBackendFailure);
    EXPECT_EQ(e.detail(), 1);
  }
}

TEST(ReferenceEncoder, ConcurrentUseIsConsistent) {
  auto enc = std::make_shared<ReferenceEncoder>(7, 32, 64);
  const PackedBackend backend(enc);
  const SourceModule m = GenerateCleanModule(9);
  const auto want = ReferenceEncoder(7, 32, 64);
  const auto expected = EmbedLines(want, m.lines);
  std::vector<std::vector<Vector>> got(4);
  std::vector<std::thread> threads;
  for (size_t t = 0; t < got.size(); ++t) {
    threads.emplace_back([&, t] { got[t] = backend.EmbedLineTexts(m.lines); });
  }
  for (auto& th : threads) th.join();
  for (const auto& g : got) EXPECT_EQ(g, expected);
}

}  // namespace
}  // namespace trojanloc
