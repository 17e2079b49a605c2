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

#ifndef TROJANLOC_GBDT_H_
#define TROJANLOC_GBDT_H_

// Newton-boosted regression trees on the logistic loss with exact greedy
// split search. Features are float32; a row goes left at a node when
// x[feature] < threshold.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace trojanloc {

// Dense row-major float32 matrix.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(size_t rows, size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0f) {}

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }

  float at(size_t r, size_t c) const { return data_[r * cols_ + c]; }
  float& at(size_t r, size_t c) { return data_[r * cols_ + c]; }

  std::span<const float> row(size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  // The first appended row fixes the width of an empty matrix.
  void AppendRow(std::span<const float> values);
  void AppendRow(std::span<const double> values);

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<float> data_;
};

enum class TreeGrowth { kDepthWise, kLeafWise };

struct GbdtConfig {
  int n_trees = 200;
  int max_depth = 6;
  double learning_rate = 0.1;
  double lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;
  // Scales gradient and hessian of positive rows. A value <= 0 selects
  // negative_count / positive_count.
  double positive_class_weight = 1.0;
  uint64_t seed = 0;
  TreeGrowth growth = TreeGrowth::kDepthWise;
  // Leaf budget for leaf-wise growth; 0 means 2^max_depth.
  int max_leaves = 0;

  void Validate() const;
};

struct TreeNode {
  int32_t left = -1;  // -1 marks a leaf
  int32_t right = -1;
  uint32_t feature = 0;
  float threshold = 0.0f;
  float weight = 0.0f;

  bool is_leaf() const { return left < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double Predict(std::span<const float> row) const;
  int Depth() const;
  bool operator==(const Tree&) const = default;
};

struct Booster {
  std::vector<Tree> trees;
  float base_score = 0.0f;
  uint32_t feature_count = 0;

  double Margin(std::span<const float> row) const;
  bool operator==(const Booster&) const = default;
};

struct MulticlassBooster {
  std::vector<Booster> per_class;  // one-vs-rest, index = class label

  int num_classes() const { return static_cast<int>(per_class.size()); }
  uint32_t feature_count() const;
  bool operator==(const MulticlassBooster&) const = default;
};

// 0.5 * [GL^2/(HL+l) + GR^2/(HR+l) - (GL+GR)^2/(HL+HR+l)] - gamma
double SplitGain(double g_left, double h_left, double g_right, double h_right,
                 double lambda, double gamma);

struct SplitInfo {
  bool valid = false;
  double gain = -std::numeric_limits<double>::infinity();
  uint32_t feature = 0;
  float threshold = 0.0f;
  double g_left = 0.0, h_left = 0.0, g_right = 0.0, h_right = 0.0;
};

// Best split of the given rows over every feature, honoring
// min_child_weight. Candidate thresholds sit between consecutive distinct
// feature values. Ties keep the lowest feature, then the lowest threshold.
// This is the same search the trainer runs at each node.
SplitInfo FindBestSplit(const FeatureMatrix& x, std::span<const double> grad,
                        std::span<const double> hess,
                        std::span<const uint32_t> rows,
                        const GbdtConfig& config);

struct GbdtTrainLog {
  // Weighted mean logistic loss after each round.
  std::vector<double> round_loss;
};

// Errors: kEmptyData (fewer than 2 rows), kSingleClass, kInvalidArgument.
Booster TrainBinary(const FeatureMatrix& x, std::span<const int> y,
                    const GbdtConfig& config, GbdtTrainLog* log = nullptr);

// Labels in [0, num_classes). Errors: kMissingClass (detail = class).
MulticlassBooster TrainMulticlass(const FeatureMatrix& x,
                                  std::span<const int> y, int num_classes,
                                  const GbdtConfig& config);

// Errors: kFeatureWidthMismatch.
std::vector<double> PredictMargin(const Booster& booster,
                                  const FeatureMatrix& x);
std::vector<double> PredictProba(const Booster& booster,
                                 const FeatureMatrix& x);
std::vector<int> Predict(const Booster& booster, const FeatureMatrix& x,
                         double threshold = 0.5);
// Argmax of per-class margins; ties go to the lowest class.
std::vector<int> Predict(const MulticlassBooster& booster,
                         const FeatureMatrix& x);

inline double Sigmoid(double m) { return 1.0 / (1.0 + std::exp(-m)); }

// "TLGB" | version u32 | feature_count u32 | n_trees u32 | base_score f32 |
// per tree a preorder stream: tag u8 (0 internal, 1 leaf); internal:
// feature u32 + threshold f32; leaf: weight f32.
std::string SerializeBooster(const Booster& booster);
Booster DeserializeBooster(std::string_view bytes);
// "TLGM" | version u32 | n_classes u32 | n_classes TLGB streams.
std::string SerializeMulticlass(const MulticlassBooster& booster);
MulticlassBooster DeserializeMulticlass(std::string_view bytes);

void SaveBooster(const std::filesystem::path& path, const Booster& booster);
Booster LoadBooster(const std::filesystem::path& path);
void SaveMulticlass(const std::filesystem::path& path,
                    const MulticlassBooster& booster);
MulticlassBooster LoadMulticlass(const std::filesystem::path& path);

}  // namespace trojanloc

#endif  // TROJANLOC_GBDT_H_
