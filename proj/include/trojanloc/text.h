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

#ifndef TROJANLOC_TEXT_H_
#define TROJANLOC_TEXT_H_

// Line-preserving RTL text transforms: line splitting, comment removal and
// identifier sanitization. None of the transforms ever changes the number of
// lines, because line indices are the unit that labels attach to.

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace trojanloc {

// Splits on '\n'. A single trailing newline does not produce an empty final
// line; interior empty lines are kept. "" yields {""}.
std::vector<std::string> SplitLines(std::string_view text);

// Inverse of SplitLines (no trailing newline).
std::string JoinLines(const std::vector<std::string>& lines);

// Drops every '\r' so CRLF corpora split the same as LF corpora.
std::string NormalizeLineEndings(std::string_view text);

// Blanks `//` and `/* */` comments with spaces. Newlines inside block
// comments survive, string literals are left untouched. An unterminated block
// comment runs to end of input; a warning is logged and `*unterminated` is
// set when provided.
std::string StripComments(std::string_view text, bool* unterminated = nullptr);

const std::vector<std::string>& DefaultDenylist();

struct SanitizeResult {
  std::string text;
  // old -> new, in order of first occurrence.
  std::vector<std::pair<std::string, std::string>> renames;
};

// Renames every identifier whose lowercase form contains a denylist entry
// (case-insensitive) to sig_<n>, appending "_x" until the name is unused.
// Identifiers inside string literals are not touched.
SanitizeResult SanitizeIdentifiers(
    std::string_view text,
    const std::vector<std::string>& denylist = DefaultDenylist());

inline bool IsWordChar(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '_' || c == '$';
}

}  // namespace trojanloc

#endif  // TROJANLOC_TEXT_H_
