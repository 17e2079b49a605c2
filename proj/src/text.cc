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

#include "trojanloc/text.h"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "trojanloc/error.h"
#include "trojanloc/log.h"

namespace trojanloc {

std::vector<std::string> SplitLines(std::string_view text) {
  std::vector<std::string> lines;
  size_t start = 0;
  while (true) {
    size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      // A trailing newline leaves start == size(); that empty tail is not a
      // line unless the whole text is empty.
      if (start < text.size() || lines.empty()) {
        lines.emplace_back(text.substr(start));
      }
      break;
    }
    lines.emplace_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::string JoinLines(const std::vector<std::string>& lines) {
  std::string out;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (i > 0) out.push_back('\n');
    out += lines[i];
  }
  return out;
}

std::string NormalizeLineEndings(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (c != '\r') out.push_back(c);
  }
  return out;
}

std::string StripComments(std::string_view text, bool* unterminated) {
  enum class State { kCode, kString, kLineComment, kBlockComment };
  std::string out(text);
  State state = State::kCode;
  for (size_t i = 0; i < out.size(); ++i) {
    const char c = out[i];
    const char next = i + 1 < out.size() ? out[i + 1] : '\0';
    switch (state) {
      case State::kCode:
        if (c == '"') {
          state = State::kString;
        } else if (c == '/' && next == '/') {
          state = State::kLineComment;
          out[i] = out[i + 1] = ' ';
          ++i;
        } else if (c == '/' && next == '*') {
          state = State::kBlockComment;
          out[i] = out[i + 1] = ' ';
          ++i;
        }
        break;
      case State::kString:
        if (c == '\\' && next != '\0' && next != '\n') {
          ++i;
        } else if (c == '"' || c == '\n') {
          // Verilog strings cannot span lines; a newline closes a stray quote.
          state = State::kCode;
        }
        break;
      case State::kLineComment:
        if (c == '\n') {
          state = State::kCode;
        } else {
          out[i] = ' ';
        }
        break;
      case State::kBlockComment:
        if (c == '*' && next == '/') {
          out[i] = out[i + 1] = ' ';
          ++i;
          state = State::kCode;
        } else if (c != '\n') {
          out[i] = ' ';
        }
        break;
    }
  }
  const bool open = state == State::kBlockComment;
  if (open) LogWarning("unterminated block comment runs to end of file");
  if (unterminated != nullptr) *unterminated = open;
  return out;
}

const std::vector<std::string>& DefaultDenylist() {
  static const std::vector<std::string> kDenylist = {
      "trojan", "trigger", "payload", "leak", "malicious", "attack", "backdoor"};
  return kDenylist;
}

namespace {

std::string Lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool StartsIdentifier(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

// Calls fn(begin, end, is_identifier) for every maximal word run outside
// string literals.
template <typename Fn>
void ForEachWord(std::string_view text, Fn&& fn) {
  bool in_string = false;
  size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\' && i + 1 < text.size() && text[i + 1] != '\n') {
        i += 2;
        continue;
      }
      if (c == '"' || c == '\n') in_string = false;
      ++i;
      continue;
    }
    if (c == '"') {
      in_string = true;
      ++i;
      continue;
    }
    if (IsWordChar(c)) {
      size_t j = i;
      while (j < text.size() && IsWordChar(text[j])) ++j;
      fn(i, j, StartsIdentifier(c));
      i = j;
      continue;
    }
    ++i;
  }
}

}  // namespace

SanitizeResult SanitizeIdentifiers(std::string_view text,
                                   const std::vector<std::string>& denylist) {
  if (denylist.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "denylist must be non-empty");
  }
  std::vector<std::string> needles;
  for (const auto& d : denylist) needles.push_back(Lower(d));

  std::set<std::string, std::less<>> existing;
  ForEachWord(text, [&](size_t b, size_t e, bool ident) {
    if (ident) existing.emplace(text.substr(b, e - b));
  });

  SanitizeResult result;
  std::map<std::string, std::string, std::less<>> mapping;
  std::set<std::string, std::less<>> taken = existing;
  size_t copied = 0;
  ForEachWord(text, [&](size_t b, size_t e, bool ident) {
    if (!ident) return;
    std::string_view word = text.substr(b, e - b);
    auto it = mapping.find(word);
    if (it == mapping.end()) {
      const std::string lower = Lower(word);
      const bool flagged =
          std::any_of(needles.begin(), needles.end(), [&](const auto& n) {
            return lower.find(n) != std::string::npos;
          });
      if (!flagged) return;
      std::string fresh = "sig_" + std::to_string(result.renames.size());
      while (taken.count(fresh) > 0) fresh += "_x";
      taken.insert(fresh);
      result.renames.emplace_back(std::string(word), fresh);
      it = mapping.emplace(std::string(word), fresh).first;
    }
    result.text.append(text.substr(copied, b - copied));
    result.text += it->second;
    copied = e;
  });
  result.text.append(text.substr(copied));
  return result;
}

}  // namespace trojanloc
