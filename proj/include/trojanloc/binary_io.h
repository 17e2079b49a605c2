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

#ifndef TROJANLOC_BINARY_IO_H_
#define TROJANLOC_BINARY_IO_H_

// Little-endian primitives shared by the cache, autoencoder and booster file
// formats. Values are encoded byte by byte so files are identical across
// hosts regardless of native endianness.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace trojanloc {

class ByteWriter {
 public:
  void Bytes(std::string_view data);
  void U8(uint8_t v);
  void U32(uint32_t v);
  void U64(uint64_t v);
  void F32(float v);

  const std::string& data() const { return data_; }

 private:
  std::string data_;
};

// Reads fail with TruncatedFile once the input runs out. `entry` is reported
// in the error detail so callers can say which record was cut short.
class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::string_view Bytes(size_t n);
  uint8_t U8();
  uint32_t U32();
  uint64_t U64();
  float F32();

  size_t remaining() const { return data_.size() - pos_; }
  bool at_end() const { return pos_ == data_.size(); }
  void set_entry(int64_t entry) { entry_ = entry; }

 private:
  void Require(size_t n) const;

  std::string_view data_;
  size_t pos_ = 0;
  int64_t entry_ = -1;
};

std::string ReadFileBytes(const std::filesystem::path& path);
// Writes through a temporary sibling and renames, so a crashed writer never
// leaves a half-written artifact behind.
void WriteFileBytes(const std::filesystem::path& path, std::string_view data);

}  // namespace trojanloc

#endif  // TROJANLOC_BINARY_IO_H_
