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

#include "trojanloc/fixtures.h"

#include <algorithm>
#include <cstdio>
#include <map>
#include <regex>

#include "trojanloc/error.h"
#include "trojanloc/rng.h"
#include "trojanloc/text.h"

namespace trojanloc {
namespace {

std::string Hex(uint64_t value, int digits) {
  static constexpr char kDigits[] = "0123456789ABCDEF";
  std::string out(static_cast<size_t>(digits), '0');
  for (int i = digits - 1; i >= 0; --i) {
    out[static_cast<size_t>(i)] = kDigits[value & 0xF];
    value >>= 4;
  }
  return out;
}

template <typename T>
const T& Pick(const std::vector<T>& items, SplitMix64& rng) {
  return items[rng.NextBelow(items.size())];
}

std::string Operand(const std::vector<std::string>& pool, SplitMix64& rng) {
  return Pick(pool, rng);
}

std::string BinaryExpr(const std::vector<std::string>& pool, SplitMix64& rng) {
  static const std::vector<std::string> kOps = {"+", "-", "^", "&", "|"};
  return Operand(pool, rng) + " " + Pick(kOps, rng) + " " +
         Operand(pool, rng);
}

// Names the fresh identifiers of each template draw from. None contains a
// denylist substring, and none overlaps the a*/q*/r*/s* names of the clean
// generator.
struct NamePools {
  std::vector<std::string> primary;
  std::vector<std::string> secondary;
};

const NamePools& PoolsFor(TrojanType type) {
  static const std::map<TrojanType, NamePools> kPools = {
      {TrojanType::kT1, {{"ev_cnt"}, {"ev_hit"}}},
      {TrojanType::kT2, {{"shd_q"}, {"cap_en"}}},
      {TrojanType::kT3, {{"wd_tmr"}, {"stall_c"}}},
      {TrojanType::kT4, {{"dly_a"}, {"dly_b"}}},
  };
  return kPools.at(type);
}

std::string Render(const std::string& line,
                   const std::map<std::string, std::string>& vars) {
  std::string out;
  size_t i = 0;
  while (i < line.size()) {
    if (line.compare(i, 2, "${") == 0) {
      const size_t close = line.find('}', i);
      const std::string key = line.substr(i + 2, close - i - 2);
      out += vars.at(key);
      i = close + 1;
    } else {
      out.push_back(line[i++]);
    }
  }
  return out;
}

bool IsDeclaration(const std::string& line) {
  static const std::regex kDecl(R"(^\s*(wire|reg)\b.*;\s*$)");
  return std::regex_match(line, kDecl);
}

// Signals a template may bind to, recovered from the host text.
struct HostSignals {
  std::vector<std::string> inputs;
  std::vector<std::string> output_regs;
  std::vector<std::string> internal_regs;
  int msb = -1;
  bool has_busy = false;
  bool has_valid_in = false;
  bool has_clk = false;
};

HostSignals ScanHost(const std::vector<std::string>& lines) {
  static const std::regex kInput(
      R"(^\s*input\s+wire\s+\[(\d+):0\]\s+(\w+)\s*,?\s*$)");
  static const std::regex kOutputReg(
      R"(^\s*output\s+reg\s+\[(\d+):0\]\s+(\w+)\s*,?\s*$)");
  static const std::regex kReg(R"(^\s*reg\s+\[(\d+):0\]\s+(\w+)\s*;\s*$)");
  static const std::regex kNamed(R"(^\s*(input|output|reg)\b.*\b(\w+)\s*[,;]?\s*$)");
  HostSignals host;
  std::smatch m;
  for (const auto& line : lines) {
    if (std::regex_match(line, m, kInput)) {
      host.inputs.push_back(m[2]);
      host.msb = std::stoi(m[1]);
    } else if (std::regex_match(line, m, kOutputReg)) {
      host.output_regs.push_back(m[2]);
    } else if (std::regex_match(line, m, kReg)) {
      host.internal_regs.push_back(m[2]);
    }
    if (std::regex_match(line, m, kNamed)) {
      if (m[2] == "busy") host.has_busy = true;
      if (m[2] == "valid_in") host.has_valid_in = true;
      if (m[2] == "clk") host.has_clk = true;
    }
  }
  return host;
}

}  // namespace

const InjectionTemplate& TemplateFor(TrojanType type) {
  static const std::map<TrojanType, InjectionTemplate> kTemplates = {
      // Functionality modification: a free-running counter flips an output
      // register when it reaches a rare value.
      {TrojanType::kT1,
       {TrojanType::kT1,
        Anchor::kBeforeEndmodule,
        {"  reg [15:0] ${id};", "  wire ${id2} = (${id} == 16'h${k16});",
         "  always @(posedge clk) ${id} <= ${id} + 16'd1;"},
        {"  always @(posedge clk) if (${id2}) ${q} <= ~${q};"}}},
      // Information leakage: a shadow register captures internal state and
      // drives it onto an output when a magic input value appears.
      {TrojanType::kT2,
       {TrojanType::kT2,
        Anchor::kAfterLastDeclaration,
        {"  reg [${msb}:0] ${id};",
         "  wire ${id2} = (${a} == ${width}'h${kw});"},
        {"  always @(posedge clk) if (${id2}) ${id} <= ${r};",
         "  always @(posedge clk) if (${id2}) ${q} <= ${id};"}}},
      // Denial of service: after a rare number of valid beats the handshake
      // busy flag is forced high, stalling ready_out.
      {TrojanType::kT3,
       {TrojanType::kT3,
        Anchor::kBeforeEndmodule,
        {"  reg [11:0] ${id};", "  wire ${id2} = (${id} == 12'h${k12});",
         "  always @(posedge clk) if (valid_in) ${id} <= ${id} + 12'd1;"},
        {"  always @(posedge clk) if (${id2}) busy <= 1'b1;"}}},
      // Performance degradation: an extra two-stage delay line re-drives an
      // output with stale data.
      {TrojanType::kT4,
       {TrojanType::kT4,
        Anchor::kAfterLastDeclaration,
        {"  reg [${msb}:0] ${id}, ${id2};",
         "  always @(posedge clk) ${id} <= ${q};"},
        {"  always @(posedge clk) ${id2} <= ${id};",
         "  always @(posedge clk) if (${a}[0]) ${q} <= ${id2};"}}},
  };
  return kTemplates.at(type);
}

SourceModule GenerateCleanModule(uint64_t seed, const SizeParams& size) {
  if (size.min_lines < 10 || size.max_lines > 500 ||
      size.min_lines > size.max_lines) {
    throw Error(ErrorCode::kInvalidArgument,
                "size bounds must satisfy 10 <= min <= max <= 500");
  }
  SplitMix64 rng(seed);
  const int target = rng.NextInt(size.min_lines, size.max_lines);
  const int width = Pick(std::vector<int>{8, 16, 32}, rng);
  const std::string range = "[" + std::to_string(width - 1) + ":0]";
  const int n_in = rng.NextInt(2, 4);
  const int n_out = rng.NextInt(1, 3);

  // Fixed scaffolding is 18 lines; each input adds 1, each wire 2 (decl +
  // assign), each register or output 3 (decl/port + reset + update). A
  // single blank line absorbs an odd remainder.
  int n_wire = 1;
  int n_reg = 1;
  int pad = 0;
  auto total = [&] {
    return 18 + n_in + 3 * n_out + 2 * n_wire + 3 * n_reg + pad;
  };
  while (total() < target) {
    if (target - total() == 1) {
      pad = 1;
      break;
    }
    if (total() + 3 <= target && rng.NextBelow(2) == 0) {
      ++n_reg;
    } else {
      ++n_wire;
    }
  }

  const std::string name = "m_" + Hex(Mix64(seed), 16);
  std::vector<std::string> lines;
  lines.push_back("module " + name + " (");
  lines.push_back("  input wire clk,");
  lines.push_back("  input wire rst_n,");
  lines.push_back("  input wire valid_in,");
  lines.push_back("  output wire ready_out,");
  std::vector<std::string> ins, outs, wires, regs;
  for (int i = 0; i < n_in; ++i) {
    ins.push_back("a" + std::to_string(i));
    lines.push_back("  input wire " + range + " " + ins.back() + ",");
  }
  for (int i = 0; i < n_out; ++i) {
    outs.push_back("q" + std::to_string(i));
    lines.push_back("  output reg " + range + " " + outs.back() +
                    (i + 1 < n_out ? "," : ""));
  }
  lines.push_back(");");
  lines.push_back("  reg busy;");
  for (int i = 0; i < n_wire; ++i) {
    wires.push_back("s" + std::to_string(i));
    lines.push_back("  wire " + range + " " + wires.back() + ";");
  }
  for (int i = 0; i < n_reg; ++i) {
    regs.push_back("r" + std::to_string(i));
    lines.push_back("  reg " + range + " " + regs.back() + ";");
  }
  lines.push_back("");
  if (pad) lines.push_back("");
  std::vector<std::string> comb = ins;
  for (int i = 0; i < n_wire; ++i) {
    // Each wire reads inputs, registers and earlier wires only.
    std::vector<std::string> pool = comb;
    pool.insert(pool.end(), regs.begin(), regs.end());
    lines.push_back("  assign " + wires[static_cast<size_t>(i)] + " = " +
                    BinaryExpr(pool, rng) + ";");
    comb.push_back(wires[static_cast<size_t>(i)]);
  }
  lines.push_back("  assign ready_out = valid_in & ~busy;");
  lines.push_back("");
  lines.push_back("  always @(posedge clk) begin");
  lines.push_back("    if (!rst_n) begin");
  lines.push_back("      busy <= 1'b0;");
  for (const auto& r : regs) lines.push_back("      " + r + " <= 0;");
  for (const auto& q : outs) lines.push_back("      " + q + " <= 0;");
  lines.push_back("    end else begin");
  lines.push_back("      busy <= valid_in & ~busy;");
  std::vector<std::string> all = comb;
  all.insert(all.end(), regs.begin(), regs.end());
  for (const auto& r : regs) {
    lines.push_back("      " + r + " <= " + BinaryExpr(all, rng) + ";");
  }
  for (const auto& q : outs) {
    lines.push_back("      " + q + " <= " + BinaryExpr(all, rng) + ";");
  }
  lines.push_back("    end");
  lines.push_back("  end");
  lines.push_back("endmodule");

  std::string text = JoinLines(lines) + "\n";
  return SourceModule::FromText(name, name, std::move(text));
}

Injection Inject(const SourceModule& clean, TrojanType type, uint64_t seed) {
  const InjectionTemplate& tmpl = TemplateFor(type);
  const std::string type_name(TrojanTypeName(type));
  const HostSignals host = ScanHost(clean.lines);
  if (!host.has_clk || host.inputs.empty() || host.output_regs.empty() ||
      host.msb < 0) {
    throw Error(ErrorCode::kAnchorNotFound,
                type_name + ": host lacks clk, data inputs or output regs");
  }
  if (type == TrojanType::kT2 && host.internal_regs.empty()) {
    throw Error(ErrorCode::kAnchorNotFound, type_name + ": no internal reg");
  }
  if (type == TrojanType::kT3 && !(host.has_busy && host.has_valid_in)) {
    throw Error(ErrorCode::kAnchorNotFound, type_name + ": no handshake");
  }

  size_t insert_at = clean.lines.size();
  if (tmpl.anchor == Anchor::kBeforeEndmodule) {
    auto it = std::find_if(clean.lines.rbegin(), clean.lines.rend(),
                           [](const std::string& l) {
                             return l.rfind("endmodule", 0) == 0;
                           });
    if (it == clean.lines.rend()) {
      throw Error(ErrorCode::kAnchorNotFound, type_name + ": no endmodule");
    }
    insert_at = static_cast<size_t>(clean.lines.rend() - it) - 1;
  } else {
    auto it = std::find_if(clean.lines.rbegin(), clean.lines.rend(),
                           IsDeclaration);
    if (it == clean.lines.rend()) {
      throw Error(ErrorCode::kAnchorNotFound, type_name + ": no declaration");
    }
    insert_at = static_cast<size_t>(clean.lines.rend() - it);
  }

  SplitMix64 rng(Mix64(seed ^ Mix64(static_cast<uint64_t>(type) + 1)));
  const NamePools& pools = PoolsFor(type);
  const int width = host.msb + 1;
  std::map<std::string, std::string> vars;
  vars["id"] = Pick(pools.primary, rng);
  vars["id2"] = Pick(pools.secondary, rng);
  vars["q"] = Pick(host.output_regs, rng);
  vars["a"] = Pick(host.inputs, rng);
  vars["r"] = host.internal_regs.empty() ? vars["q"]
                                         : Pick(host.internal_regs, rng);
  vars["msb"] = std::to_string(host.msb);
  vars["width"] = std::to_string(width);
  vars["k16"] = Hex(rng.Next(), 4);
  vars["k12"] = Hex(rng.Next(), 3);
  vars["kw"] = Hex(rng.Next(), (width + 3) / 4);

  std::vector<std::string> block;
  for (const auto& l : tmpl.trigger_lines) block.push_back(Render(l, vars));
  for (const auto& l : tmpl.payload_lines) block.push_back(Render(l, vars));

  std::vector<std::string> lines(clean.lines.begin(),
                                 clean.lines.begin() + insert_at);
  LineMask truth(insert_at, 0);
  lines.insert(lines.end(), block.begin(), block.end());
  truth.insert(truth.end(), block.size(), 1);
  lines.insert(lines.end(), clean.lines.begin() + insert_at,
               clean.lines.end());
  truth.insert(truth.end(), clean.lines.size() - insert_at, 0);

  std::string text = JoinLines(lines);
  if (!clean.text.empty() && clean.text.back() == '\n') text += "\n";
  Injection out{SourceModule::FromText(clean.id + "_" + type_name,
                                       clean.base_id, std::move(text)),
                std::move(truth)};
  // Every template line carries a fresh identifier, so no block line can
  // equal a host line and the alignment recovers the block exactly.
  if (AlignLineLabels(clean.lines, out.module.lines) != out.truth) {
    throw Error(ErrorCode::kAnchorNotFound,
                type_name + ": injected block is not alignment-recoverable");
  }
  return out;
}

Corpus GenerateFixtureCorpus(int n_base, uint64_t seed,
                             const SizeParams& size) {
  if (n_base < 1) {
    throw Error(ErrorCode::kInvalidArgument, "n_base must be >= 1");
  }
  Corpus corpus;
  corpus.provenance["source"] = "fixtures";
  corpus.provenance["seed"] = std::to_string(seed);
  corpus.provenance["bases"] = std::to_string(n_base);
  for (int b = 0; b < n_base; ++b) {
    const uint64_t base_seed = DeriveSeed(seed, static_cast<uint64_t>(b));
    SourceModule clean = GenerateCleanModule(base_seed, size);
    LabeledModule clean_record;
    clean_record.line_labels.assign(clean.lines.size(), 0);
    clean_record.module = clean;
    corpus.records.push_back(std::move(clean_record));
    for (TrojanType t : kAllTrojanTypes) {
      Injection inj = Inject(clean, t, DeriveSeed(base_seed, "inject"));
      LabeledModule r;
      r.module = std::move(inj.module);
      r.line_labels = std::move(inj.truth);
      r.is_trojan = true;
      r.trojan_type = t;
      corpus.records.push_back(std::move(r));
    }
  }
  return corpus;
}

}  // namespace trojanloc
