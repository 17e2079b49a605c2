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

#include "trojanloc/gbdt.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trojanloc/binary_io.h"
#include "trojanloc/error.h"

namespace trojanloc {
namespace {

constexpr std::string_view kBoosterMagic = "TLGB";
constexpr std::string_view kMulticlassMagic = "TLGM";
constexpr uint32_t kBoosterVersion = 1;

// One feature's rows sorted by value (ties by row index).
struct SortedColumn {
  std::vector<uint32_t> rows;
  std::vector<float> values;
};

std::vector<SortedColumn> Presort(const FeatureMatrix& x,
                                  std::span<const uint32_t> rows) {
  std::vector<SortedColumn> cols(x.cols());
  std::vector<uint32_t> order(rows.begin(), rows.end());
  for (size_t f = 0; f < x.cols(); ++f) {
    std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
      const float va = x.at(a, f);
      const float vb = x.at(b, f);
      return va < vb || (va == vb && a < b);
    });
    cols[f].rows = order;
    cols[f].values.resize(order.size());
    for (size_t i = 0; i < order.size(); ++i) {
      cols[f].values[i] = x.at(order[i], f);
    }
  }
  return cols;
}

// A threshold t with lo < t <= hi, so lo goes left and hi goes right.
float Midpoint(float lo, float hi) {
  float mid = lo + (hi - lo) * 0.5f;
  if (!(mid > lo) || !(mid <= hi)) mid = hi;
  return mid;
}

struct NodeSums {
  double g = 0.0;
  double h = 0.0;
};

// Best split for every slot in one pass per feature. slot_of_row maps a row
// to its slot or -1 when the row is not being split.
std::vector<SplitInfo> ScanSplits(const std::vector<SortedColumn>& cols,
                                  std::span<const double> grad,
                                  std::span<const double> hess,
                                  std::span<const int32_t> slot_of_row,
                                  std::span<const NodeSums> sums,
                                  const GbdtConfig& config) {
  const size_t n_slots = sums.size();
  std::vector<SplitInfo> best(n_slots);
  std::vector<double> gl(n_slots), hl(n_slots);
  std::vector<float> last(n_slots);
  std::vector<char> seen(n_slots);
  for (size_t f = 0; f < cols.size(); ++f) {
    std::fill(gl.begin(), gl.end(), 0.0);
    std::fill(hl.begin(), hl.end(), 0.0);
    std::fill(seen.begin(), seen.end(), 0);
    const SortedColumn& col = cols[f];
    for (size_t i = 0; i < col.rows.size(); ++i) {
      const uint32_t r = col.rows[i];
      const int32_t s = slot_of_row[r];
      if (s < 0) continue;
      const float v = col.values[i];
      if (seen[s] && v != last[s]) {
        const double hr = sums[s].h - hl[s];
        if (hl[s] >= config.min_child_weight &&
            hr >= config.min_child_weight) {
          const double gr = sums[s].g - gl[s];
          const double gain =
              SplitGain(gl[s], hl[s], gr, hr, config.lambda, config.gamma);
          if (gain > best[s].gain) {
            SplitInfo& b = best[s];
            b.valid = true;
            b.gain = gain;
            b.feature = static_cast<uint32_t>(f);
            b.threshold = Midpoint(last[s], v);
            b.g_left = gl[s];
            b.h_left = hl[s];
            b.g_right = gr;
            b.h_right = hr;
          }
        }
      }
      gl[s] += grad[r];
      hl[s] += hess[r];
      last[s] = v;
      seen[s] = 1;
    }
  }
  return best;
}

float LeafWeight(const NodeSums& s, const GbdtConfig& c) {
  return static_cast<float>(-s.g / (s.h + c.lambda) * c.learning_rate);
}

void Preorder(const std::vector<TreeNode>& in, int32_t node,
              std::vector<TreeNode>& out) {
  const size_t slot = out.size();
  out.push_back(in[static_cast<size_t>(node)]);
  if (in[static_cast<size_t>(node)].is_leaf()) return;
  out[slot].left = static_cast<int32_t>(out.size());
  Preorder(in, in[static_cast<size_t>(node)].left, out);
  out[slot].right = static_cast<int32_t>(out.size());
  Preorder(in, in[static_cast<size_t>(node)].right, out);
}

// Grows one tree over all rows; returns it in preorder layout.
Tree GrowTree(const FeatureMatrix& x, const std::vector<SortedColumn>& cols,
              std::span<const double> grad, std::span<const double> hess,
              const GbdtConfig& config) {
  const size_t n = x.rows();
  std::vector<TreeNode> nodes(1);
  std::vector<int32_t> node_of_row(n, 0);
  std::vector<int> depth_of(1, 0);

  auto sums_of = [&](std::span<const int32_t> node_ids) {
    std::vector<int32_t> slot(nodes.size(), -1);
    for (size_t i = 0; i < node_ids.size(); ++i) {
      slot[static_cast<size_t>(node_ids[i])] = static_cast<int32_t>(i);
    }
    std::vector<int32_t> slot_of_row(n, -1);
    std::vector<NodeSums> sums(node_ids.size());
    for (size_t r = 0; r < n; ++r) {
      const int32_t node = node_of_row[r];
      if (node < 0) continue;
      const int32_t s = slot[static_cast<size_t>(node)];
      slot_of_row[r] = s;
      if (s < 0) continue;
      sums[static_cast<size_t>(s)].g += grad[r];
      sums[static_cast<size_t>(s)].h += hess[r];
    }
    return std::make_pair(std::move(slot_of_row), std::move(sums));
  };

  auto split_node = [&](int32_t node, const SplitInfo& split) {
    const auto left = static_cast<int32_t>(nodes.size());
    nodes.emplace_back();
    nodes.emplace_back();
    depth_of.push_back(depth_of[static_cast<size_t>(node)] + 1);
    depth_of.push_back(depth_of[static_cast<size_t>(node)] + 1);
    TreeNode& parent = nodes[static_cast<size_t>(node)];
    parent.left = left;
    parent.right = left + 1;
    parent.feature = split.feature;
    parent.threshold = split.threshold;
    return left;
  };
  auto route = [&](size_t r, const SplitInfo& split, int32_t left) {
    node_of_row[r] = x.at(r, split.feature) < split.threshold ? left : left + 1;
  };

  std::vector<std::pair<int32_t, NodeSums>> leaves;
  if (config.growth == TreeGrowth::kDepthWise) {
    std::vector<int32_t> frontier = {0};
    for (int depth = 0; !frontier.empty(); ++depth) {
      auto [slot_of_row, sums] = sums_of(frontier);
      std::vector<SplitInfo> best;
      if (depth < config.max_depth) {
        best = ScanSplits(cols, grad, hess, slot_of_row, sums, config);
      }
      std::vector<int32_t> next;
      std::vector<int32_t> left_of(frontier.size(), -1);
      for (size_t s = 0; s < frontier.size(); ++s) {
        if (depth < config.max_depth && best[s].valid && best[s].gain > 0.0) {
          left_of[s] = split_node(frontier[s], best[s]);
          next.push_back(left_of[s]);
          next.push_back(left_of[s] + 1);
        } else {
          leaves.emplace_back(frontier[s], sums[s]);
        }
      }
      for (size_t r = 0; r < n; ++r) {
        const int32_t s = slot_of_row[r];
        if (s < 0) continue;
        if (left_of[static_cast<size_t>(s)] < 0) {
          node_of_row[r] = -1;
        } else {
          route(r, best[static_cast<size_t>(s)], left_of[static_cast<size_t>(s)]);
        }
      }
      frontier = std::move(next);
    }
  } else {
    const int max_leaves =
        config.max_leaves > 0 ? config.max_leaves : (1 << config.max_depth);
    struct Candidate {
      int32_t node;
      NodeSums sums;
      SplitInfo split;
    };
    std::vector<Candidate> open;
    auto evaluate = [&](std::vector<int32_t> ids) {
      auto [slot_of_row, sums] = sums_of(ids);
      auto best = ScanSplits(cols, grad, hess, slot_of_row, sums, config);
      for (size_t i = 0; i < ids.size(); ++i) {
        open.push_back({ids[i], sums[i], best[i]});
      }
    };
    evaluate({0});
    int n_leaves = 1;
    while (n_leaves < max_leaves) {
      int pick = -1;
      for (size_t i = 0; i < open.size(); ++i) {
        const Candidate& c = open[i];
        if (!c.split.valid || !(c.split.gain > 0.0) ||
            depth_of[static_cast<size_t>(c.node)] >= config.max_depth) {
          continue;
        }
        if (pick < 0 || c.split.gain > open[static_cast<size_t>(pick)].split.gain) {
          pick = static_cast<int>(i);
        }
      }
      if (pick < 0) break;
      const Candidate chosen = open[static_cast<size_t>(pick)];
      open.erase(open.begin() + pick);
      const int32_t left = split_node(chosen.node, chosen.split);
      for (size_t r = 0; r < n; ++r) {
        if (node_of_row[r] == chosen.node) route(r, chosen.split, left);
      }
      evaluate({left, left + 1});
      ++n_leaves;
    }
    for (const Candidate& c : open) leaves.emplace_back(c.node, c.sums);
  }
  for (const auto& [node, sums] : leaves) {
    nodes[static_cast<size_t>(node)].weight = LeafWeight(sums, config);
  }

  Tree tree;
  Preorder(nodes, 0, tree.nodes);
  return tree;
}

void CheckWidth(uint32_t expected, size_t got) {
  if (got != expected) {
    throw Error(ErrorCode::kFeatureWidthMismatch,
                "model expects " + std::to_string(expected) +
                    " features, got " + std::to_string(got));
  }
}

double LogisticLoss(double margin, int y) {
  // log(1 + exp(-m)) for y = 1, log(1 + exp(m)) for y = 0, overflow-safe.
  const double z = y == 1 ? -margin : margin;
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

}  // namespace

void FeatureMatrix::AppendRow(std::span<const float> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) {
    throw Error(ErrorCode::kFeatureWidthMismatch, "row width mismatch");
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

void FeatureMatrix::AppendRow(std::span<const double> values) {
  std::vector<float> f(values.begin(), values.end());
  AppendRow(std::span<const float>(f));
}

void GbdtConfig::Validate() const {
  if (n_trees < 1) throw Error(ErrorCode::kInvalidArgument, "n_trees < 1");
  if (max_depth < 1) throw Error(ErrorCode::kInvalidArgument, "max_depth < 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "learning_rate not in (0, 1]");
  }
  if (lambda < 0.0 || gamma < 0.0 || min_child_weight < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "negative regularizer");
  }
}

double Tree::Predict(std::span<const float> row) const {
  size_t node = 0;
  while (!nodes[node].is_leaf()) {
    const TreeNode& n = nodes[node];
    node = static_cast<size_t>(row[n.feature] < n.threshold ? n.left
                                                            : n.right);
  }
  return nodes[node].weight;
}

int Tree::Depth() const {
  std::vector<int> depth(nodes.size(), 0);
  int max_depth = 0;
  for (size_t i = 0; i < nodes.size(); ++i) {
    max_depth = std::max(max_depth, depth[i]);
    if (!nodes[i].is_leaf()) {
      depth[static_cast<size_t>(nodes[i].left)] = depth[i] + 1;
      depth[static_cast<size_t>(nodes[i].right)] = depth[i] + 1;
    }
  }
  return max_depth;
}

double Booster::Margin(std::span<const float> row) const {
  CheckWidth(feature_count, row.size());
  double m = base_score;
  for (const Tree& t : trees) m += t.Predict(row);
  return m;
}

uint32_t MulticlassBooster::feature_count() const {
  return per_class.empty() ? 0 : per_class.front().feature_count;
}

double SplitGain(double g_left, double h_left, double g_right, double h_right,
                 double lambda, double gamma) {
  const double g = g_left + g_right;
  const double h = h_left + h_right;
  return 0.5 * (g_left * g_left / (h_left + lambda) +
                g_right * g_right / (h_right + lambda) - g * g / (h + lambda)) -
         gamma;
}

SplitInfo FindBestSplit(const FeatureMatrix& x, std::span<const double> grad,
                        std::span<const double> hess,
                        std::span<const uint32_t> rows,
                        const GbdtConfig& config) {
  const auto cols = Presort(x, rows);
  std::vector<int32_t> slot_of_row(x.rows(), -1);
  NodeSums sums;
  for (uint32_t r : rows) {
    slot_of_row[r] = 0;
    sums.g += grad[r];
    sums.h += hess[r];
  }
  return ScanSplits(cols, grad, hess, slot_of_row,
                    std::span<const NodeSums>(&sums, 1), config)
      .front();
}

Booster TrainBinary(const FeatureMatrix& x, std::span<const int> y,
                    const GbdtConfig& config, GbdtTrainLog* log) {
  config.Validate();
  if (x.rows() < 2 || x.cols() == 0) {
    throw Error(ErrorCode::kEmptyData, "need at least two rows and a feature");
  }
  if (y.size() != x.rows()) {
    throw Error(ErrorCode::kInvalidArgument, "label count != row count");
  }
  const size_t n = x.rows();
  size_t positives = 0;
  for (int label : y) {
    if (label != 0 && label != 1) {
      throw Error(ErrorCode::kInvalidArgument, "binary labels must be 0/1");
    }
    positives += static_cast<size_t>(label);
  }
  if (positives == 0 || positives == n) {
    throw Error(ErrorCode::kSingleClass, "training labels have one class");
  }
  const double pos_weight =
      config.positive_class_weight > 0.0
          ? config.positive_class_weight
          : static_cast<double>(n - positives) / static_cast<double>(positives);

  std::vector<double> weight(n);
  double w_total = 0.0;
  double w_pos = 0.0;
  for (size_t r = 0; r < n; ++r) {
    weight[r] = y[r] == 1 ? pos_weight : 1.0;
    w_total += weight[r];
    if (y[r] == 1) w_pos += weight[r];
  }

  Booster booster;
  booster.feature_count = static_cast<uint32_t>(x.cols());
  booster.base_score = static_cast<float>(std::log(w_pos / (w_total - w_pos)));

  std::vector<uint32_t> all(n);
  std::iota(all.begin(), all.end(), 0u);
  const auto cols = Presort(x, all);

  std::vector<double> margin(n, static_cast<double>(booster.base_score));
  std::vector<double> grad(n), hess(n);
  for (int round = 0; round < config.n_trees; ++round) {
    for (size_t r = 0; r < n; ++r) {
      const double p = Sigmoid(margin[r]);
      grad[r] = (p - y[r]) * weight[r];
      hess[r] = std::max(p * (1.0 - p), 1e-16) * weight[r];
    }
    Tree tree = GrowTree(x, cols, grad, hess, config);
    double loss = 0.0;
    for (size_t r = 0; r < n; ++r) {
      margin[r] += tree.Predict(x.row(r));
      loss += weight[r] * LogisticLoss(margin[r], y[r]);
    }
    booster.trees.push_back(std::move(tree));
    if (log != nullptr) log->round_loss.push_back(loss / w_total);
  }
  return booster;
}

MulticlassBooster TrainMulticlass(const FeatureMatrix& x,
                                  std::span<const int> y, int num_classes,
                                  const GbdtConfig& config) {
  if (num_classes < 2) {
    throw Error(ErrorCode::kInvalidArgument, "need at least two classes");
  }
  if (y.size() != x.rows()) {
    throw Error(ErrorCode::kInvalidArgument, "label count != row count");
  }
  std::vector<size_t> counts(static_cast<size_t>(num_classes), 0);
  for (int label : y) {
    if (label < 0 || label >= num_classes) {
      throw Error(ErrorCode::kInvalidArgument, "label out of range");
    }
    ++counts[static_cast<size_t>(label)];
  }
  for (int k = 0; k < num_classes; ++k) {
    if (counts[static_cast<size_t>(k)] == 0) {
      throw Error(ErrorCode::kMissingClass,
                  "class " + std::to_string(k) + " absent", k);
    }
  }
  MulticlassBooster out;
  std::vector<int> one_vs_rest(y.size());
  for (int k = 0; k < num_classes; ++k) {
    for (size_t i = 0; i < y.size(); ++i) one_vs_rest[i] = y[i] == k ? 1 : 0;
    out.per_class.push_back(TrainBinary(x, one_vs_rest, config));
  }
  return out;
}

std::vector<double> PredictMargin(const Booster& booster,
                                  const FeatureMatrix& x) {
  CheckWidth(booster.feature_count, x.cols());
  std::vector<double> out(x.rows());
  for (size_t r = 0; r < x.rows(); ++r) out[r] = booster.Margin(x.row(r));
  return out;
}

std::vector<double> PredictProba(const Booster& booster,
                                 const FeatureMatrix& x) {
  std::vector<double> out = PredictMargin(booster, x);
  for (double& m : out) m = Sigmoid(m);
  return out;
}

std::vector<int> Predict(const Booster& booster, const FeatureMatrix& x,
                         double threshold) {
  const auto proba = PredictProba(booster, x);
  std::vector<int> out(proba.size());
  for (size_t i = 0; i < proba.size(); ++i) out[i] = proba[i] >= threshold;
  return out;
}

std::vector<int> Predict(const MulticlassBooster& booster,
                         const FeatureMatrix& x) {
  std::vector<std::vector<double>> margins;
  for (const Booster& b : booster.per_class) {
    margins.push_back(PredictMargin(b, x));
  }
  std::vector<int> out(x.rows(), 0);
  for (size_t r = 0; r < x.rows(); ++r) {
    for (size_t k = 1; k < margins.size(); ++k) {
      if (margins[k][r] > margins[static_cast<size_t>(out[r])][r]) {
        out[r] = static_cast<int>(k);
      }
    }
  }
  return out;
}

namespace {

void WriteTree(const Tree& tree, size_t node, ByteWriter& w) {
  const TreeNode& n = tree.nodes[node];
  if (n.is_leaf()) {
    w.U8(1);
    w.F32(n.weight);
    return;
  }
  w.U8(0);
  w.U32(n.feature);
  w.F32(n.threshold);
  WriteTree(tree, static_cast<size_t>(n.left), w);
  WriteTree(tree, static_cast<size_t>(n.right), w);
}

int32_t ReadTree(ByteReader& r, uint32_t feature_count, int depth, Tree& tree) {
  if (depth > 64) throw Error(ErrorCode::kMalformedRecord, "tree too deep");
  const auto index = static_cast<int32_t>(tree.nodes.size());
  tree.nodes.emplace_back();
  const uint8_t tag = r.U8();
  if (tag == 1) {
    tree.nodes[static_cast<size_t>(index)].weight = r.F32();
    return index;
  }
  if (tag != 0) throw Error(ErrorCode::kMalformedRecord, "bad node tag");
  const uint32_t feature = r.U32();
  const float threshold = r.F32();
  if (feature >= feature_count) {
    throw Error(ErrorCode::kMalformedRecord, "feature index out of range");
  }
  const int32_t left = ReadTree(r, feature_count, depth + 1, tree);
  const int32_t right = ReadTree(r, feature_count, depth + 1, tree);
  TreeNode& n = tree.nodes[static_cast<size_t>(index)];
  n.feature = feature;
  n.threshold = threshold;
  n.left = left;
  n.right = right;
  return index;
}

void WriteBooster(const Booster& b, ByteWriter& w) {
  w.Bytes(kBoosterMagic);
  w.U32(kBoosterVersion);
  w.U32(b.feature_count);
  w.U32(static_cast<uint32_t>(b.trees.size()));
  w.F32(b.base_score);
  for (const Tree& t : b.trees) WriteTree(t, 0, w);
}

Booster ReadBooster(ByteReader& r) {
  if (r.remaining() < kBoosterMagic.size() ||
      r.Bytes(kBoosterMagic.size()) != kBoosterMagic) {
    throw Error(ErrorCode::kBadMagic, "not a booster file");
  }
  const uint32_t version = r.U32();
  if (version != kBoosterVersion) {
    throw Error(ErrorCode::kVersionUnsupported,
                "booster version " + std::to_string(version));
  }
  Booster b;
  b.feature_count = r.U32();
  const uint32_t n_trees = r.U32();
  b.base_score = r.F32();
  for (uint32_t t = 0; t < n_trees; ++t) {
    r.set_entry(t);
    Tree tree;
    ReadTree(r, b.feature_count, 0, tree);
    b.trees.push_back(std::move(tree));
  }
  return b;
}

}  // namespace

std::string SerializeBooster(const Booster& booster) {
  ByteWriter w;
  WriteBooster(booster, w);
  return w.data();
}

Booster DeserializeBooster(std::string_view bytes) {
  ByteReader r(bytes);
  return ReadBooster(r);
}

std::string SerializeMulticlass(const MulticlassBooster& booster) {
  ByteWriter w;
  w.Bytes(kMulticlassMagic);
  w.U32(kBoosterVersion);
  w.U32(static_cast<uint32_t>(booster.per_class.size()));
  for (const Booster& b : booster.per_class) WriteBooster(b, w);
  return w.data();
}

MulticlassBooster DeserializeMulticlass(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.remaining() < kMulticlassMagic.size() ||
      r.Bytes(kMulticlassMagic.size()) != kMulticlassMagic) {
    throw Error(ErrorCode::kBadMagic, "not a multiclass booster file");
  }
  const uint32_t version = r.U32();
  if (version != kBoosterVersion) {
    throw Error(ErrorCode::kVersionUnsupported,
                "multiclass version " + std::to_string(version));
  }
  const uint32_t k = r.U32();
  MulticlassBooster out;
  for (uint32_t i = 0; i < k; ++i) out.per_class.push_back(ReadBooster(r));
  return out;
}

void SaveBooster(const std::filesystem::path& path, const Booster& booster) {
  WriteFileBytes(path, SerializeBooster(booster));
}

Booster LoadBooster(const std::filesystem::path& path) {
  if (path.empty()) throw Error(ErrorCode::kIoError, "empty model path");
  return DeserializeBooster(ReadFileBytes(path));
}

void SaveMulticlass(const std::filesystem::path& path,
                    const MulticlassBooster& booster) {
  WriteFileBytes(path, SerializeMulticlass(booster));
}

MulticlassBooster LoadMulticlass(const std::filesystem::path& path) {
  if (path.empty()) throw Error(ErrorCode::kIoError, "empty model path");
  return DeserializeMulticlass(ReadFileBytes(path));
}

}  // namespace trojanloc
