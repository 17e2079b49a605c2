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

#ifndef TROJANLOC_RNG_H_
#define TROJANLOC_RNG_H_

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace trojanloc {

// SplitMix64 (Steele, Lea & Flood). Chosen because its update and output
// function are a handful of integer operations that every platform evaluates
// identically, which keeps fixtures and reference embeddings bit-reproducible.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t Next();

  // Uniform in [0, 1) with 53 random bits.
  double NextDouble();

  // Uniform integer in [0, n). n must be positive.
  uint64_t NextBelow(uint64_t n);

  // Uniform integer in [lo, hi].
  int NextInt(int lo, int hi);

  // Standard normal via the Box-Muller cosine branch; consumes two draws.
  double NextGaussian();

 private:
  uint64_t state_;
};

// The SplitMix64 output finalizer applied to an arbitrary word.
uint64_t Mix64(uint64_t x);

// 64-bit FNV-1a over raw bytes.
uint64_t Fnv1a64(std::string_view bytes);

// Independent sub-seed for a named consumer of a parent seed.
uint64_t DeriveSeed(uint64_t seed, std::string_view label);
uint64_t DeriveSeed(uint64_t seed, uint64_t index);

// Fisher-Yates shuffle driven by SplitMix64.
template <typename T>
void Shuffle(std::vector<T>& items, SplitMix64& rng) {
  for (size_t i = items.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng.NextBelow(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace trojanloc

#endif  // TROJANLOC_RNG_H_
