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

#include "trojanloc/embedding_cache.h"

#include "trojanloc/binary_io.h"
#include "trojanloc/error.h"

namespace trojanloc {
namespace {
constexpr std::string_view kMagic = "TLEC";
}  // namespace

void EmbeddingCache::Put(const std::string& key,
                         std::span<const double> vector) {
  Put(key, std::vector<float>(vector.begin(), vector.end()));
}

void EmbeddingCache::Put(const std::string& key, std::vector<float> vector) {
  if (vector.size() != d_model) {
    throw Error(ErrorCode::kDimensionError,
                key + ": width " + std::to_string(vector.size()) +
                    " != d_model " + std::to_string(d_model));
  }
  entries[key] = std::move(vector);
}

const std::vector<float>* EmbeddingCache::Find(const std::string& key) const {
  auto it = entries.find(key);
  return it == entries.end() ? nullptr : &it->second;
}

std::string LineKey(std::string_view id, size_t index) {
  return std::string(id) + "#" + std::to_string(index);
}

std::string SerializeCache(const EmbeddingCache& cache) {
  ByteWriter w;
  w.Bytes(kMagic);
  w.U32(kCacheVersion);
  w.U32(cache.d_model);
  w.U64(cache.entries.size());
  for (const auto& [key, vec] : cache.entries) {
    w.U32(static_cast<uint32_t>(key.size()));
    w.Bytes(key);
    for (float x : vec) w.F32(x);
  }
  return w.data();
}

EmbeddingCache DeserializeCache(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.remaining() < kMagic.size() || r.Bytes(kMagic.size()) != kMagic) {
    throw Error(ErrorCode::kBadMagic, "not an embedding cache");
  }
  const uint32_t version = r.U32();
  if (version != kCacheVersion) {
    throw Error(ErrorCode::kVersionUnsupported,
                "cache version " + std::to_string(version));
  }
  EmbeddingCache cache;
  cache.d_model = r.U32();
  const uint64_t count = r.U64();
  for (uint64_t i = 0; i < count; ++i) {
    r.set_entry(static_cast<int64_t>(i));
    const uint32_t key_len = r.U32();
    std::string key(r.Bytes(key_len));
    std::vector<float> vec(cache.d_model);
    for (float& x : vec) x = r.F32();
    cache.entries.emplace(std::move(key), std::move(vec));
  }
  if (!r.at_end()) {
    throw Error(ErrorCode::kDimensionError,
                "trailing bytes after last entry; d_model inconsistent");
  }
  return cache;
}

void WriteCache(const std::filesystem::path& path,
                const EmbeddingCache& cache) {
  WriteFileBytes(path, SerializeCache(cache));
}

EmbeddingCache ReadCache(const std::filesystem::path& path) {
  return DeserializeCache(ReadFileBytes(path));
}

}  // namespace trojanloc
