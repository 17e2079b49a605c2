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

#include "trojanloc/autoencoder.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "trojanloc/binary_io.h"
#include "trojanloc/error.h"
#include "trojanloc/rng.h"

namespace trojanloc {
namespace {

constexpr std::string_view kMagic = "TLAE";
constexpr uint32_t kVersion = 1;

void CheckWidth(const AeParams& params, Eigen::Index width) {
  if (width != params.w_enc.cols()) {
    throw Error(ErrorCode::kDimensionError,
                "input width " + std::to_string(width) + " != d_in " +
                    std::to_string(params.d_in()));
  }
}

RowMatrix Hidden(const AeParams& p, const RowMatrix& x) {
  RowMatrix a = x * p.w_enc.transpose();
  a.rowwise() += p.b_enc.transpose();
  return a.array().tanh().matrix();
}

RowMatrix Reconstruct(const AeParams& p, const RowMatrix& h) {
  RowMatrix x_hat = h * p.w_dec.transpose();
  x_hat.rowwise() += p.b_dec.transpose();
  return x_hat;
}

RowMatrix Gather(const RowMatrix& data, const std::vector<size_t>& rows,
                 size_t begin, size_t end) {
  RowMatrix out(static_cast<Eigen::Index>(end - begin), data.cols());
  for (size_t i = begin; i < end; ++i) {
    out.row(static_cast<Eigen::Index>(i - begin)) =
        data.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

// First and second moment buffers for one parameter block.
template <typename T>
struct Moments {
  T m;
  T v;
  explicit Moments(const T& like)
      : m(T::Zero(like.rows(), like.cols())),
        v(T::Zero(like.rows(), like.cols())) {}

  void Step(T& param, const T& grad, const AeTrainConfig& c, double bc1,
            double bc2) {
    m = c.beta1 * m + (1.0 - c.beta1) * grad;
    v = c.beta2 * v + (1.0 - c.beta2) * grad.cwiseProduct(grad);
    param.array() -= c.learning_rate * (m.array() / bc1) /
                     ((v.array() / bc2).sqrt() + c.epsilon);
  }
};

}  // namespace

void AeTrainConfig::Validate() const {
  if (!(learning_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "learning_rate must be > 0");
  }
  if (batch_size < 1) {
    throw Error(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  }
  if (max_epochs < 0 || patience < 1) {
    throw Error(ErrorCode::kInvalidArgument, "bad epoch/patience settings");
  }
}

AeParams AeInit(int d_in, int d_enc, uint64_t seed) {
  if (d_enc < 1 || d_enc >= d_in) {
    throw Error(ErrorCode::kDimensionError,
                "need 0 < d_enc < d_in, got d_in=" + std::to_string(d_in) +
                    " d_enc=" + std::to_string(d_enc));
  }
  SplitMix64 rng(seed);
  const double a = std::sqrt(6.0 / static_cast<double>(d_in + d_enc));
  auto draw = [&] { return (2.0 * rng.NextDouble() - 1.0) * a; };
  AeParams p;
  p.w_enc.resize(d_enc, d_in);
  for (int r = 0; r < d_enc; ++r) {
    for (int c = 0; c < d_in; ++c) p.w_enc(r, c) = draw();
  }
  p.w_dec.resize(d_in, d_enc);
  for (int r = 0; r < d_in; ++r) {
    for (int c = 0; c < d_enc; ++c) p.w_dec(r, c) = draw();
  }
  p.b_enc = Eigen::VectorXd::Zero(d_enc);
  p.b_dec = Eigen::VectorXd::Zero(d_in);
  return p;
}

AeForwardResult AeForward(const AeParams& params, const Eigen::VectorXd& x) {
  CheckWidth(params, x.size());
  AeForwardResult r;
  r.h = (params.w_enc * x + params.b_enc).array().tanh().matrix();
  r.x_hat = params.w_dec * r.h + params.b_dec;
  return r;
}

double AeLoss(const Eigen::VectorXd& x, const Eigen::VectorXd& x_hat) {
  if (x.size() != x_hat.size()) {
    throw Error(ErrorCode::kDimensionError, "loss operands differ in width");
  }
  return (x - x_hat).squaredNorm();
}

AeGradients AeGrad(const AeParams& params, const RowMatrix& batch) {
  if (batch.rows() == 0) {
    throw Error(ErrorCode::kEmptyData, "gradient of an empty batch");
  }
  CheckWidth(params, batch.cols());
  const double n = static_cast<double>(batch.rows());
  const RowMatrix h = Hidden(params, batch);
  const RowMatrix residual = Reconstruct(params, h) - batch;
  // d(loss)/d(x_hat) for the mean over samples of ||x_hat - x||^2.
  const RowMatrix d_out = (2.0 / n) * residual;
  const RowMatrix d_pre =
      ((d_out * params.w_dec).array() * (1.0 - h.array().square())).matrix();
  AeGradients g;
  g.loss = residual.squaredNorm() / n;
  g.w_dec = d_out.transpose() * h;
  g.b_dec = d_out.colwise().sum().transpose();
  g.w_enc = d_pre.transpose() * batch;
  g.b_enc = d_pre.colwise().sum().transpose();
  return g;
}

double AeBatchLoss(const AeParams& params, const RowMatrix& data) {
  CheckWidth(params, data.cols());
  if (data.rows() == 0) return 0.0;
  const RowMatrix x_hat = Reconstruct(params, Hidden(params, data));
  return (x_hat - data).squaredNorm() / static_cast<double>(data.rows());
}

AeParams AeTrain(const RowMatrix& data, int d_enc, const AeTrainConfig& config,
                 AeTrainLog* log) {
  config.Validate();
  if (data.rows() == 0) {
    throw Error(ErrorCode::kEmptyData, "autoencoder training data is empty");
  }
  const size_t n = static_cast<size_t>(data.rows());
  SplitMix64 rng(config.seed);
  AeParams params =
      AeInit(static_cast<int>(data.cols()), d_enc, DeriveSeed(config.seed, "init"));

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Shuffle(order, rng);
  const size_t n_val = n >= 10 ? n / 10 : 0;
  std::vector<size_t> train_rows(order.begin(), order.end() - static_cast<ptrdiff_t>(n_val));
  std::sort(train_rows.begin(), train_rows.end());
  RowMatrix train = Gather(data, train_rows, 0, train_rows.size());
  RowMatrix validation =
      n_val > 0 ? Gather(data, order, n - n_val, n) : train;

  Moments<Eigen::MatrixXd> m_w_enc(params.w_enc), m_w_dec(params.w_dec);
  Moments<Eigen::VectorXd> m_b_enc(params.b_enc), m_b_dec(params.b_dec);

  AeTrainLog local_log;
  AeTrainLog& out_log = log != nullptr ? *log : local_log;
  out_log = AeTrainLog{};
  out_log.initial_train_loss = AeBatchLoss(params, train);
  AeParams best = params;
  double best_val = AeBatchLoss(params, validation);
  int since_best = 0;
  int64_t step = 0;

  std::vector<size_t> batch_order(train_rows.size());
  std::iota(batch_order.begin(), batch_order.end(), 0);
  const size_t bs = static_cast<size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    Shuffle(batch_order, rng);
    for (size_t start = 0; start < batch_order.size(); start += bs) {
      const size_t end = std::min(batch_order.size(), start + bs);
      const RowMatrix batch = Gather(train, batch_order, start, end);
      const AeGradients g = AeGrad(params, batch);
      ++step;
      const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      m_w_enc.Step(params.w_enc, g.w_enc, config, bc1, bc2);
      m_b_enc.Step(params.b_enc, g.b_enc, config, bc1, bc2);
      m_w_dec.Step(params.w_dec, g.w_dec, config, bc1, bc2);
      m_b_dec.Step(params.b_dec, g.b_dec, config, bc1, bc2);
    }
    out_log.train_loss.push_back(AeBatchLoss(params, train));
    const double val = AeBatchLoss(params, validation);
    out_log.validation_loss.push_back(val);
    if (val < best_val) {
      best_val = val;
      best = params;
      out_log.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return best;
}

Eigen::VectorXd AeEncode(const AeParams& params, const Eigen::VectorXd& x) {
  CheckWidth(params, x.size());
  return (params.w_enc * x + params.b_enc).array().tanh().matrix();
}

RowMatrix AeEncodeBatch(const AeParams& params, const RowMatrix& data) {
  CheckWidth(params, data.cols());
  return Hidden(params, data);
}

void RoundToFloat(AeParams& params) {
  auto round = [](auto& m) {
    m = m.template cast<float>().template cast<double>();
  };
  round(params.w_enc);
  round(params.b_enc);
  round(params.w_dec);
  round(params.b_dec);
}

std::string SerializeAe(const AeParams& p) {
  ByteWriter w;
  w.Bytes(kMagic);
  w.U32(kVersion);
  w.U32(static_cast<uint32_t>(p.d_in()));
  w.U32(static_cast<uint32_t>(p.d_enc()));
  for (Eigen::Index r = 0; r < p.w_enc.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.w_enc.cols(); ++c) {
      w.F32(static_cast<float>(p.w_enc(r, c)));
    }
  }
  for (Eigen::Index i = 0; i < p.b_enc.size(); ++i) {
    w.F32(static_cast<float>(p.b_enc(i)));
  }
  for (Eigen::Index r = 0; r < p.w_dec.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.w_dec.cols(); ++c) {
      w.F32(static_cast<float>(p.w_dec(r, c)));
    }
  }
  for (Eigen::Index i = 0; i < p.b_dec.size(); ++i) {
    w.F32(static_cast<float>(p.b_dec(i)));
  }
  return w.data();
}

AeParams DeserializeAe(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.remaining() < kMagic.size() || r.Bytes(kMagic.size()) != kMagic) {
    throw Error(ErrorCode::kBadMagic, "not an autoencoder file");
  }
  const uint32_t version = r.U32();
  if (version != kVersion) {
    throw Error(ErrorCode::kVersionUnsupported,
                "autoencoder version " + std::to_string(version));
  }
  const int d_in = static_cast<int>(r.U32());
  const int d_enc = static_cast<int>(r.U32());
  if (d_enc < 1 || d_enc >= d_in) {
    throw Error(ErrorCode::kDimensionError, "bad autoencoder dimensions");
  }
  AeParams p;
  p.w_enc.resize(d_enc, d_in);
  p.b_enc.resize(d_enc);
  p.w_dec.resize(d_in, d_enc);
  p.b_dec.resize(d_in);
  for (int i = 0; i < d_enc; ++i) {
    for (int c = 0; c < d_in; ++c) p.w_enc(i, c) = r.F32();
  }
  for (int i = 0; i < d_enc; ++i) p.b_enc(i) = r.F32();
  for (int i = 0; i < d_in; ++i) {
    for (int c = 0; c < d_enc; ++c) p.w_dec(i, c) = r.F32();
  }
  for (int i = 0; i < d_in; ++i) p.b_dec(i) = r.F32();
  return p;
}

void SaveAe(const std::filesystem::path& path, const AeParams& params) {
  WriteFileBytes(path, SerializeAe(params));
}

AeParams LoadAe(const std::filesystem::path& path) {
  return DeserializeAe(ReadFileBytes(path));
}

}  // namespace trojanloc
