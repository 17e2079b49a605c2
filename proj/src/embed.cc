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

#include "trojanloc/embed.h"

#include <cctype>
#include <cmath>

#include "trojanloc/error.h"
#include "trojanloc/log.h"
#include "trojanloc/rng.h"
#include "trojanloc/text.h"

namespace trojanloc {

void BackendDescriptor::Validate() const {
  if (d_model < 1) {
    throw Error(ErrorCode::kInvalidArgument, "d_model must be >= 1");
  }
  if (max_tokens < 8) {
    throw Error(ErrorCode::kInvalidArgument, "max_tokens must be >= 8");
  }
}

TokenSeq Tokenize(std::string_view text) {
  TokenSeq seq;
  size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (IsWordChar(c)) {
      size_t j = i;
      while (j < text.size() && IsWordChar(text[j])) ++j;
      seq.tokens.emplace_back(text.substr(i, j - i));
      i = j;
    } else {
      seq.tokens.emplace_back(1, c);
      ++i;
    }
  }
  if (seq.tokens.empty()) seq.tokens.emplace_back(kEmptyToken);
  return seq;
}

void SegmentedBatch::Validate() const {
  size_t expected = 0;
  for (const Segment& s : segments) {
    if (s.begin != expected || s.end <= s.begin) {
      throw Error(ErrorCode::kInvalidArgument,
                  "segments must be non-empty, sorted and contiguous");
    }
    expected = s.end;
  }
  if (expected != tokens.size()) {
    throw Error(ErrorCode::kInvalidArgument, "segments must cover all tokens");
  }
}

bool SegmentedBatch::Allows(size_t k, size_t j) const {
  if (j > k) return false;
  for (const Segment& s : segments) {
    if (k >= s.begin && k < s.end) return j >= s.begin;
  }
  return false;
}

Vector RefTokenVector(std::string_view token, uint64_t seed, int d_model) {
  SplitMix64 rng(Mix64(Fnv1a64(token) ^ Mix64(seed)));
  Vector v(static_cast<size_t>(d_model));
  double norm2 = 0.0;
  for (double& x : v) {
    x = rng.NextGaussian();
    norm2 += x * x;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
  return v;
}

namespace {

void EncodeSegment(std::span<const Vector* const> token_vectors, int d_model,
                   std::span<Vector> out) {
  const size_t n = token_vectors.size();
  const size_t d = static_cast<size_t>(d_model);
  for (size_t k = 0; k < n; ++k) {
    Vector e(d, 0.0);
    for (size_t j = 0; j <= k; ++j) {
      const double w = 1.0 / static_cast<double>(1 + k - j);
      const Vector& v = *token_vectors[j];
      for (size_t c = 0; c < d; ++c) e[c] += w * v[c];
    }
    double norm2 = 0.0;
    for (double x : e) norm2 += x * x;
    if (norm2 > 0.0) {
      const double inv = 1.0 / std::sqrt(norm2);
      for (double& x : e) x *= inv;
    }
    out[k] = std::move(e);
  }
}

std::vector<Vector> EncodeWith(const SegmentedBatch& batch, int d_model,
                               std::span<const Vector* const> vectors) {
  batch.Validate();
  std::vector<Vector> out(batch.tokens.size());
  for (const Segment& s : batch.segments) {
    EncodeSegment(vectors.subspan(s.begin, s.size()), d_model,
                  std::span<Vector>(out).subspan(s.begin, s.size()));
  }
  return out;
}

}  // namespace

std::vector<Vector> RefContextualEncode(const SegmentedBatch& batch,
                                        uint64_t seed, int d_model) {
  std::vector<Vector> token_vectors;
  token_vectors.reserve(batch.tokens.size());
  for (const auto& t : batch.tokens) {
    token_vectors.push_back(RefTokenVector(t, seed, d_model));
  }
  std::vector<const Vector*> ptrs;
  for (const auto& v : token_vectors) ptrs.push_back(&v);
  return EncodeWith(batch, d_model, ptrs);
}

Vector MeanPool(std::span<const Vector> embs, size_t begin, size_t end) {
  if (begin >= end || end > embs.size()) {
    throw Error(ErrorCode::kEmptyRange, "mean pooling over an empty range");
  }
  Vector mean(embs[begin].size(), 0.0);
  for (size_t k = begin; k < end; ++k) {
    for (size_t c = 0; c < mean.size(); ++c) mean[c] += embs[k][c];
  }
  const double inv = 1.0 / static_cast<double>(end - begin);
  for (double& x : mean) x *= inv;
  return mean;
}

ReferenceEncoder::ReferenceEncoder(uint64_t seed, int d_model, int max_tokens)
    : seed_(seed), d_model_(d_model), max_tokens_(max_tokens) {
  Describe().Validate();
}

BackendDescriptor ReferenceEncoder::Describe() const {
  return {"reference", d_model_, max_tokens_};
}

TokenSeq ReferenceEncoder::TokenizeText(std::string_view text) const {
  return Tokenize(text);
}

const Vector& ReferenceEncoder::TokenVector(const std::string& token) const {
  {
    std::shared_lock lock(mu_);
    auto it = vectors_.find(token);
    if (it != vectors_.end()) return it->second;
  }
  Vector v = RefTokenVector(token, seed_, d_model_);
  std::unique_lock lock(mu_);
  // unordered_map references stay valid across rehashing.
  return vectors_.try_emplace(token, std::move(v)).first->second;
}

std::vector<Vector> ReferenceEncoder::Encode(
    const SegmentedBatch& batch) const {
  std::vector<const Vector*> ptrs;
  ptrs.reserve(batch.tokens.size());
  for (const auto& t : batch.tokens) ptrs.push_back(&TokenVector(t));
  return EncodeWith(batch, d_model_, ptrs);
}

Vector EmbedModule(const TokenEncoder& encoder, std::string_view text) {
  const BackendDescriptor desc = encoder.Describe();
  const TokenSeq seq = encoder.TokenizeText(text);
  const size_t t = seq.tokens.size();
  const size_t window = static_cast<size_t>(desc.max_tokens);
  Vector total(static_cast<size_t>(desc.d_model), 0.0);
  for (size_t start = 0; start < t; start += window) {
    const size_t end = std::min(t, start + window);
    SegmentedBatch chunk;
    chunk.tokens.assign(seq.tokens.begin() + static_cast<ptrdiff_t>(start),
                        seq.tokens.begin() + static_cast<ptrdiff_t>(end));
    chunk.segments.push_back({0, end - start});
    const std::vector<Vector> embs = encoder.Encode(chunk);
    const Vector mean = MeanPool(embs, 0, embs.size());
    const double weight = static_cast<double>(end - start);
    for (size_t c = 0; c < total.size(); ++c) total[c] += weight * mean[c];
  }
  for (double& x : total) x /= static_cast<double>(t);
  return total;
}

std::vector<SegmentedBatch> PackLines(std::span<const TokenSeq> lines,
                                      int max_tokens) {
  const size_t cap = static_cast<size_t>(max_tokens);
  std::vector<SegmentedBatch> batches;
  SegmentedBatch current;
  for (size_t i = 0; i < lines.size(); ++i) {
    const auto& tokens = lines[i].tokens;
    size_t len = tokens.size();
    if (len > cap) {
      LogWarning("line " + std::to_string(i) + " has " + std::to_string(len) +
                 " tokens; truncated to " + std::to_string(cap));
      len = cap;
    }
    if (!current.tokens.empty() && current.tokens.size() + len > cap) {
      batches.push_back(std::move(current));
      current = SegmentedBatch{};
    }
    const size_t begin = current.tokens.size();
    current.tokens.insert(current.tokens.end(), tokens.begin(),
                          tokens.begin() + static_cast<ptrdiff_t>(len));
    current.segments.push_back({begin, begin + len});
  }
  if (!current.tokens.empty()) batches.push_back(std::move(current));
  return batches;
}

std::vector<Vector> EmbedLines(const TokenEncoder& encoder,
                               std::span<const std::string> lines) {
  const BackendDescriptor desc = encoder.Describe();
  std::vector<TokenSeq> seqs;
  seqs.reserve(lines.size());
  for (const auto& l : lines) seqs.push_back(encoder.TokenizeText(l));
  const auto batches = PackLines(seqs, desc.max_tokens);
  std::vector<Vector> out;
  out.reserve(lines.size());
  for (size_t b = 0; b < batches.size(); ++b) {
    std::vector<Vector> embs;
    try {
      embs = encoder.Encode(batches[b]);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kBackendFailure,
                  "batch " + std::to_string(b) + ": " + e.what(),
                  static_cast<int64_t>(b));
    }
    for (const Segment& s : batches[b].segments) {
      out.push_back(MeanPool(embs, s.begin, s.end));
    }
  }
  return out;
}

}  // namespace trojanloc
