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

#ifndef TROJANLOC_EMBEDDING_CACHE_H_
#define TROJANLOC_EMBEDDING_CACHE_H_

// Binary embedding cache:
//   "TLEC" | version u32 | d_model u32 | count u64 |
//   count x (key_len u32 | key bytes | d_model x f32)
// All integers and floats little-endian. Entries are written in key order.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace trojanloc {

inline constexpr uint32_t kCacheVersion = 1;

struct EmbeddingCache {
  uint32_t d_model = 0;
  std::map<std::string, std::vector<float>> entries;

  // Throws kDimensionError when the vector width differs from d_model.
  void Put(const std::string& key, std::span<const double> vector);
  void Put(const std::string& key, std::vector<float> vector);
  // nullptr when absent.
  const std::vector<float>* Find(const std::string& key) const;

  bool operator==(const EmbeddingCache&) const = default;
};

// Key of line `index` of module `id`.
std::string LineKey(std::string_view id, size_t index);

std::string SerializeCache(const EmbeddingCache& cache);
// Errors: kBadMagic, kVersionUnsupported, kTruncatedFile (detail = entry
// index, or -1 inside the header), kDimensionError.
EmbeddingCache DeserializeCache(std::string_view bytes);

void WriteCache(const std::filesystem::path& path, const EmbeddingCache& cache);
EmbeddingCache ReadCache(const std::filesystem::path& path);

}  // namespace trojanloc

#endif  // TROJANLOC_EMBEDDING_CACHE_H_
