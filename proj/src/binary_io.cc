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

#include "trojanloc/binary_io.h"

#include <bit>
#include <fstream>
#include <sstream>

#include "trojanloc/error.h"

namespace trojanloc {

void ByteWriter::Bytes(std::string_view data) { data_.append(data); }

void ByteWriter::U8(uint8_t v) { data_.push_back(static_cast<char>(v)); }

void ByteWriter::U32(uint32_t v) {
  for (int i = 0; i < 4; ++i) U8(static_cast<uint8_t>(v >> (8 * i)));
}

void ByteWriter::U64(uint64_t v) {
  for (int i = 0; i < 8; ++i) U8(static_cast<uint8_t>(v >> (8 * i)));
}

void ByteWriter::F32(float v) { U32(std::bit_cast<uint32_t>(v)); }

void ByteReader::Require(size_t n) const {
  if (remaining() < n) {
    throw Error(ErrorCode::kTruncatedFile,
                "unexpected end of data at offset " + std::to_string(pos_) +
                    (entry_ >= 0 ? " in entry " + std::to_string(entry_) : ""),
                entry_);
  }
}

std::string_view ByteReader::Bytes(size_t n) {
  Require(n);
  std::string_view out = data_.substr(pos_, n);
  pos_ += n;
  return out;
}

uint8_t ByteReader::U8() {
  Require(1);
  return static_cast<uint8_t>(data_[pos_++]);
}

uint32_t ByteReader::U32() {
  Require(4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(U8()) << (8 * i);
  return v;
}

uint64_t ByteReader::U64() {
  Require(8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(U8()) << (8 * i);
  return v;
}

float ByteReader::F32() { return std::bit_cast<float>(U32()); }

std::string ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteFileBytes(const std::filesystem::path& path, std::string_view data) {
  if (path.empty()) {
    throw Error(ErrorCode::kIoError, "empty output path");
  }
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error(ErrorCode::kIoError, "short write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace trojanloc
