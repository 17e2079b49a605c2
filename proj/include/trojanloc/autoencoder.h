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

#ifndef TROJANLOC_AUTOENCODER_H_
#define TROJANLOC_AUTOENCODER_H_

// Single-hidden-layer autoencoder used for dimensionality reduction:
//   h = tanh(W_enc x + b_enc),  x_hat = W_dec h + b_dec,
//   loss = ||x - x_hat||^2 per sample, averaged over a minibatch.
// Training runs in double precision; parameter files store float32.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace trojanloc {

// Samples are rows.
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct AeParams {
  Eigen::MatrixXd w_enc;  // d_enc x d_in
  Eigen::VectorXd b_enc;  // d_enc
  Eigen::MatrixXd w_dec;  // d_in x d_enc
  Eigen::VectorXd b_dec;  // d_in

  int d_in() const { return static_cast<int>(w_enc.cols()); }
  int d_enc() const { return static_cast<int>(w_enc.rows()); }
};

struct AeTrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 256;
  int max_epochs = 100;
  uint64_t seed = 0;
  // Epochs without a validation improvement before stopping.
  int patience = 10;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void Validate() const;
};

// Glorot-uniform weights in (-a, a), a = sqrt(6 / (d_in + d_enc)); zero
// biases. Throws kDimensionError unless 0 < d_enc < d_in.
AeParams AeInit(int d_in, int d_enc, uint64_t seed);

struct AeForwardResult {
  Eigen::VectorXd h;
  Eigen::VectorXd x_hat;
};

AeForwardResult AeForward(const AeParams& params, const Eigen::VectorXd& x);

// Sum of squared differences.
double AeLoss(const Eigen::VectorXd& x, const Eigen::VectorXd& x_hat);

struct AeGradients {
  Eigen::MatrixXd w_enc;
  Eigen::VectorXd b_enc;
  Eigen::MatrixXd w_dec;
  Eigen::VectorXd b_dec;
  double loss = 0.0;  // mean per-sample loss of the batch
};

// Exact gradients of the mean-over-batch loss.
AeGradients AeGrad(const AeParams& params, const RowMatrix& batch);

// Mean per-sample loss over all rows.
double AeBatchLoss(const AeParams& params, const RowMatrix& data);

struct AeTrainLog {
  double initial_train_loss = 0.0;
  std::vector<double> train_loss;       // full training-set loss per epoch
  std::vector<double> validation_loss;  // per epoch
  int best_epoch = -1;                  // -1: the initial parameters won
};

// Adam on shuffled minibatches. 10% of the rows (when there are at least 10)
// are held out for validation; the parameters with the lowest validation
// loss are returned. Throws kEmptyData on an empty matrix.
AeParams AeTrain(const RowMatrix& data, int d_enc, const AeTrainConfig& config,
                 AeTrainLog* log = nullptr);

Eigen::VectorXd AeEncode(const AeParams& params, const Eigen::VectorXd& x);
RowMatrix AeEncodeBatch(const AeParams& params, const RowMatrix& data);

// Rounds every parameter to the nearest float32, so in-memory parameters
// match what a save/load round trip yields.
void RoundToFloat(AeParams& params);

// "TLAE" | version u32 | d_in u32 | d_enc u32 | W_enc | b_enc | W_dec | b_dec
// with matrices row-major, all f32 little-endian.
std::string SerializeAe(const AeParams& params);
AeParams DeserializeAe(std::string_view bytes);
void SaveAe(const std::filesystem::path& path, const AeParams& params);
AeParams LoadAe(const std::filesystem::path& path);

}  // namespace trojanloc

#endif  // TROJANLOC_AUTOENCODER_H_
