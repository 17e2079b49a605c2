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

#ifndef TROJANLOC_ALIGN_H_
#define TROJANLOC_ALIGN_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace trojanloc {

// Binary per-line labels; 1 marks a Trojan line.
using LineMask = std::vector<uint8_t>;

// Labels each trojaned line 0 when a longest common subsequence (exact string
// equality) matches it to a clean line and 1 otherwise. Among equally long
// alignments, matches are taken as early as possible in both sequences, which
// attributes a contiguous insertion to the inserted block rather than to an
// identical line that precedes it.
LineMask AlignLineLabels(std::span<const std::string> clean_lines,
                         std::span<const std::string> trojan_lines);

}  // namespace trojanloc

#endif  // TROJANLOC_ALIGN_H_
