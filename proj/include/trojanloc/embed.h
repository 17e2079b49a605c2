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

#ifndef TROJANLOC_EMBED_H_
#define TROJANLOC_EMBED_H_

// Encoder-backend contract and the deterministic reference encoder.
//
// The reference encoder reproduces exactly the properties the pipeline relies
// on from a causal transformer: a token's final embedding depends only on the
// tokens at or before it within its own segment. Packing many lines into one
// batch with segment-restricted masks is therefore equivalent to encoding each
// line on its own.

#include <cstdint>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace trojanloc {

using Vector = std::vector<double>;

struct BackendDescriptor {
  std::string name;
  int d_model = 0;
  int max_tokens = 0;

  // d_model >= 1 and max_tokens >= 8, else kInvalidArgument.
  void Validate() const;
};

// Returned for empty or whitespace-only text.
inline constexpr std::string_view kEmptyToken = "⟂";

struct TokenSeq {
  std::vector<std::string> tokens;
};

// Maximal [A-Za-z0-9_$] runs, plus each other non-whitespace byte on its own.
TokenSeq Tokenize(std::string_view text);

struct Segment {
  size_t begin = 0;
  size_t end = 0;  // exclusive

  size_t size() const { return end - begin; }
  bool operator==(const Segment&) const = default;
};

// Concatenated tokens of several texts. The implied attention mask lets
// position k see position j iff j <= k and both lie in the same segment.
struct SegmentedBatch {
  std::vector<std::string> tokens;
  std::vector<Segment> segments;

  // Segments must be non-empty, sorted, disjoint and cover every token.
  void Validate() const;
  bool Allows(size_t k, size_t j) const;
};

// Unit-norm pseudo-random token vector seeded by hash(seed, token).
Vector RefTokenVector(std::string_view token, uint64_t seed, int d_model);

// e_k = normalize(sum_{j=g..k} v(token_j) / (1 + k - j)) for k in segment
// [g, h).
std::vector<Vector> RefContextualEncode(const SegmentedBatch& batch,
                                        uint64_t seed, int d_model);

// Arithmetic mean of embs[begin, end). Throws kEmptyRange when empty.
Vector MeanPool(std::span<const Vector> embs, size_t begin, size_t end);

// Token-level encoder: tokenizes and produces final token embeddings for a
// packed batch. Implementations must be safe for concurrent const use.
class TokenEncoder {
 public:
  virtual ~TokenEncoder() = default;
  virtual BackendDescriptor Describe() const = 0;
  virtual TokenSeq TokenizeText(std::string_view text) const = 0;
  virtual std::vector<Vector> Encode(const SegmentedBatch& batch) const = 0;
};

class ReferenceEncoder final : public TokenEncoder {
 public:
  ReferenceEncoder(uint64_t seed, int d_model, int max_tokens);

  BackendDescriptor Describe() const override;
  TokenSeq TokenizeText(std::string_view text) const override;
  std::vector<Vector> Encode(const SegmentedBatch& batch) const override;

  uint64_t seed() const { return seed_; }

 private:
  const Vector& TokenVector(const std::string& token) const;

  uint64_t seed_;
  int d_model_;
  int max_tokens_;
  mutable std::shared_mutex mu_;
  mutable std::unordered_map<std::string, Vector> vectors_;
};

// Whole-text embedding. Texts longer than max_tokens are cut into
// consecutive max_tokens windows encoded independently; the result is the
// token-count-weighted mean of the window means, i.e. the mean over every
// produced token embedding.
Vector EmbedModule(const TokenEncoder& encoder, std::string_view text);

// Greedy in-order packing, one segment per line. Lines longer than max_tokens
// keep their first max_tokens tokens and a warning is logged.
std::vector<SegmentedBatch> PackLines(std::span<const TokenSeq> lines,
                                      int max_tokens);

// One embedding per line, computed from packed batches.
std::vector<Vector> EmbedLines(const TokenEncoder& encoder,
                               std::span<const std::string> lines);

// Text-level backend used by the pipeline.
class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual BackendDescriptor Describe() const = 0;
  virtual Vector EmbedModuleText(std::string_view text) const = 0;
  virtual std::vector<Vector> EmbedLineTexts(
      std::span<const std::string> lines) const = 0;
};

// Adapts a TokenEncoder with packed line encoding.
class PackedBackend final : public EmbeddingBackend {
 public:
  explicit PackedBackend(std::shared_ptr<const TokenEncoder> encoder)
      : encoder_(std::move(encoder)) {}

  BackendDescriptor Describe() const override { return encoder_->Describe(); }
  Vector EmbedModuleText(std::string_view text) const override {
    return EmbedModule(*encoder_, text);
  }
  std::vector<Vector> EmbedLineTexts(
      std::span<const std::string> lines) const override {
    return EmbedLines(*encoder_, lines);
  }

 private:
  std::shared_ptr<const TokenEncoder> encoder_;
};

}  // namespace trojanloc

#endif  // TROJANLOC_EMBED_H_
