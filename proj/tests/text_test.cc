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

#include <gtest/gtest.h>

#include <set>
#include <string>
#include <vector>

#include "trojanloc/log.h"
#include "trojanloc/rng.h"
#include "trojanloc/text.h"

namespace trojanloc {
namespace {

using Lines = std::vector<std::string>;

// Character scan: every '\n' ends a line; the text after the last newline is
// a line unless it is empty and at least one line exists.
Lines ScanLines(const std::string& text) {
  Lines out(1);
  for (char c : text) {
    if (c == '\n') {
      out.emplace_back();
    } else {
      out.back().push_back(c);
    }
  }
  if (out.size() > 1 && out.back().empty()) out.pop_back();
  return out;
}

TEST(SplitLines, Examples) {
  EXPECT_EQ(SplitLines("a\nb\n"), (Lines{"a", "b"}));
  EXPECT_EQ(SplitLines(""), (Lines{""}));
  EXPECT_EQ(SplitLines("x\n\ny"), (Lines{"x", "", "y"}));
  EXPECT_EQ(SplitLines("\n"), (Lines{""}));
  EXPECT_EQ(SplitLines("a\n\n"), (Lines{"a", ""}));
}

TEST(SplitLines, MatchesCharacterScan) {
  SplitMix64 rng(11);
  const std::string alphabet = "ab \n\n;";
  for (int trial = 0; trial < 2000; ++trial) {
    std::string text;
    const auto len = rng.NextBelow(12);
    for (uint64_t i = 0; i < len; ++i) {
      text.push_back(alphabet[rng.NextBelow(alphabet.size())]);
    }
    ASSERT_EQ(SplitLines(text), ScanLines(text)) << "text: " << text;
  }
}

TEST(SplitLines, JoinInvertsSplit) {
  for (const std::string t : {"a\nb", "", "x\n\ny", "\n\nz"}) {
    EXPECT_EQ(JoinLines(SplitLines(t)), t);
  }
}

TEST(NormalizeLineEndings, DropsCarriageReturns) {
  EXPECT_EQ(NormalizeLineEndings("a\r\nb\r\n"), "a\nb\n");
}

TEST(StripComments, LineComment) {
  EXPECT_EQ(StripComments("a; // trojan\nb;"), "a;          \nb;");
}

TEST(StripComments, BlockCommentKeepsNewlines) {
  EXPECT_EQ(StripComments("x /* T\nU */ y"), "x     \n     y");
}

TEST(StripComments, StringLiteralUntouched) {
  const std::string s = "\"a // not comment\"";
  EXPECT_EQ(StripComments(s), s);
  const std::string esc = "$display(\"q\\\" /* x */\");";
  EXPECT_EQ(StripComments(esc), esc);
}

TEST(StripComments, UnterminatedBlockRunsToEnd) {
  std::vector<std::string> warnings;
  auto prev = SetLogSink([&](LogLevel, std::string_view m) {
    warnings.emplace_back(m);
  });
  bool open = false;
  EXPECT_EQ(StripComments("a /* b\nc", &open), "a     \n ");
  SetLogSink(prev);
  EXPECT_TRUE(open);
  EXPECT_EQ(warnings.size(), 1u);
}

// Independent oracle: explicit scanner that tracks the open construct and
// emits the replacement per character.
std::string OracleStrip(const std::string& in) {
  std::string out;
  size_t i = 0;
  const size_t n = in.size();
  while (i < n) {
    if (in[i] == '"') {
      out.push_back(in[i++]);
      while (i < n && in[i] != '"' && in[i] != '\n') {
        if (in[i] == '\\' && i + 1 < n && in[i + 1] != '\n') {
          out.push_back(in[i++]);
        }
        out.push_back(in[i++]);
      }
      if (i < n) out.push_back(in[i++]);
    } else if (in.compare(i, 2, "//") == 0) {
      while (i < n && in[i] != '\n') {
        out.push_back(' ');
        ++i;
      }
    } else if (in.compare(i, 2, "/*") == 0) {
      out += "  ";
      i += 2;
      while (i < n && in.compare(i, 2, "*/") != 0) {
        out.push_back(in[i] == '\n' ? '\n' : ' ');
        ++i;
      }
      if (i < n) {
        out += "  ";
        i += 2;
      }
    } else {
      out.push_back(in[i++]);
    }
  }
  return out;
}

TEST(StripComments, AgreesWithScannerOracleOnFiftyCases) {
  const std::vector<std::string> fragments = {
      "a", "b;", " ", "\n", "//", "/*", "*/", "\"", "\\", "*", "/", "x = 1;",
      "\"s\"", "// c\n", "/* k */"};
  SplitMix64 rng(2024);
  std::set<std::string> seen;
  int cases = 0;
  while (cases < 50) {
    std::string text;
    const auto parts = 1 + rng.NextBelow(10);
    for (uint64_t p = 0; p < parts; ++p) {
      text += fragments[rng.NextBelow(fragments.size())];
    }
    if (!seen.insert(text).second) continue;
    ++cases;
    auto prev = SetLogSink([](LogLevel, std::string_view) {});
    const std::string got = StripComments(text);
    SetLogSink(prev);
    ASSERT_EQ(got, OracleStrip(text)) << "input: " << text;
    ASSERT_EQ(SplitLines(got).size(), SplitLines(text).size());
  }
}

TEST(SanitizeIdentifiers, SingleRename) {
  const auto r = SanitizeIdentifiers("wire trojan_en;");
  EXPECT_EQ(r.text, "wire sig_0;");
  ASSERT_EQ(r.renames.size(), 1u);
  EXPECT_EQ(r.renames[0].first, "trojan_en");
  EXPECT_EQ(r.renames[0].second, "sig_0");
}

TEST(SanitizeIdentifiers, ConsistentRenames) {
  const auto r = SanitizeIdentifiers("assign trig = trig_r;", {"trig"});
  EXPECT_EQ(r.text, "assign sig_0 = sig_1;");
  const auto again =
      SanitizeIdentifiers("assign trig = trig_r | trig;", {"trig"});
  EXPECT_EQ(again.text, "assign sig_0 = sig_1 | sig_0;");
}

TEST(SanitizeIdentifiers, CaseInsensitive) {
  EXPECT_EQ(SanitizeIdentifiers("reg TrOjAnX;").text, "reg sig_0;");
}

TEST(SanitizeIdentifiers, AvoidsCollisions) {
  const auto r =
      SanitizeIdentifiers("wire sig_0;\nwire payload_q;\nassign sig_0 = "
                          "payload_q;");
  EXPECT_EQ(r.renames.at(0).second, "sig_0_x");
  // No declaration name appears twice.
  std::multiset<std::string> decls;
  for (const auto& line : SplitLines(r.text)) {
    if (line.rfind("wire ", 0) == 0) decls.insert(line.substr(5));
  }
  for (const auto& d : decls) EXPECT_EQ(decls.count(d), 1u) << d;
}

TEST(SanitizeIdentifiers, LeavesOtherTextAlone) {
  const std::string t = "assign q = a + 8'd3; // leaky\n";
  EXPECT_EQ(SanitizeIdentifiers(t).text, t.substr(0, t.find("leaky")) +
                                             "sig_0\n");
  const std::string s = "$display(\"trojan\");";
  EXPECT_EQ(SanitizeIdentifiers(s).text, s);
}

TEST(SanitizeIdentifiers, PreservesLineCount) {
  const std::string t = "a\n\ntrigger_x\nb\n";
  EXPECT_EQ(SplitLines(SanitizeIdentifiers(t).text).size(),
            SplitLines(t).size());
}

TEST(SanitizeIdentifiers, EmptyDenylistThrows) {
  EXPECT_ANY_THROW(SanitizeIdentifiers("x", {}));
}

}  // namespace
}  // namespace trojanloc
