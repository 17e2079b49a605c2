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

#include "trojanloc/align.h"

#include <algorithm>

namespace trojanloc {

LineMask AlignLineLabels(std::span<const std::string> clean_lines,
                         std::span<const std::string> trojan_lines) {
  const size_t n = clean_lines.size();
  const size_t m = trojan_lines.size();
  // suffix[i][j] = LCS length of clean[i:] and trojan[j:].
  std::vector<uint32_t> suffix((n + 1) * (m + 1), 0);
  auto at = [m](size_t i, size_t j) { return i * (m + 1) + j; };
  for (size_t i = n; i-- > 0;) {
    for (size_t j = m; j-- > 0;) {
      if (clean_lines[i] == trojan_lines[j]) {
        suffix[at(i, j)] = suffix[at(i + 1, j + 1)] + 1;
      } else {
        suffix[at(i, j)] =
            std::max(suffix[at(i + 1, j)], suffix[at(i, j + 1)]);
      }
    }
  }

  LineMask mask(m, 1);
  size_t i = 0;
  size_t j = 0;
  while (i < n && j < m) {
    if (clean_lines[i] == trojan_lines[j]) {
      mask[j] = 0;
      ++i;
      ++j;
    } else if (suffix[at(i + 1, j)] >= suffix[at(i, j + 1)]) {
      // Dropping the clean line keeps the trojaned line available for a
      // later match; prefer it on ties so insertions stay unmatched.
      ++i;
    } else {
      ++j;
    }
  }
  return mask;
}

}  // namespace trojanloc
