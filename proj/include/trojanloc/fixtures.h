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

#ifndef TROJANLOC_FIXTURES_H_
#define TROJANLOC_FIXTURES_H_

// Deterministic synthetic RTL: clean single-module designs plus template
// Trojan insertions (T1..T4) with exact per-line ground truth.

#include <cstdint>
#include <string>
#include <vector>

#include "trojanloc/align.h"
#include "trojanloc/corpus.h"

namespace trojanloc {

struct SizeParams {
  int min_lines = 40;
  int max_lines = 80;
};

enum class Anchor { kAfterLastDeclaration, kBeforeEndmodule };

// Line templates use ${name} placeholders resolved against the host module
// (clk, q, r, a, w = data width msb) and fresh per-injection identifiers.
struct InjectionTemplate {
  TrojanType trojan_type;
  Anchor anchor;
  std::vector<std::string> trigger_lines;
  std::vector<std::string> payload_lines;
};

const InjectionTemplate& TemplateFor(TrojanType type);

// Module with declarations, combinational assigns and one clocked block.
// Throws kInvalidArgument unless 10 <= min_lines <= max_lines <= 500.
SourceModule GenerateCleanModule(uint64_t seed, const SizeParams& size = {});

struct Injection {
  SourceModule module;
  LineMask truth;
};

// Inserts the type's template as one contiguous block. The clean lines are
// kept byte-identical. Throws kAnchorNotFound when the host lacks the anchor
// or the signals the template drives.
Injection Inject(const SourceModule& clean, TrojanType type, uint64_t seed);

// n_base clean designs, each followed by one variant per Trojan type. All
// records start in the train split.
Corpus GenerateFixtureCorpus(int n_base, uint64_t seed,
                             const SizeParams& size = {});

}  // namespace trojanloc

#endif  // TROJANLOC_FIXTURES_H_
