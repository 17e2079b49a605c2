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

#include "trojanloc/pipeline.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "trojanloc/error.h"
#include "trojanloc/log.h"
#include "trojanloc/rng.h"

namespace trojanloc {
namespace {

Eigen::VectorXd ToEigen(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

Vector FromEigen(const Eigen::VectorXd& v) {
  return Vector(v.data(), v.data() + v.size());
}

Vector ToDouble(const std::vector<float>& v) {
  return Vector(v.begin(), v.end());
}

AeTrainConfig AeConfigFor(const ModelConfig& config, std::string_view label) {
  AeTrainConfig ae = config.ae;
  ae.seed = DeriveSeed(config.seed, label);
  return ae;
}

GbdtConfig GbdtConfigFor(const ModelConfig& config, std::string_view label) {
  GbdtConfig g = config.gbdt;
  g.seed = DeriveSeed(config.seed, label);
  return g;
}

std::vector<size_t> TrainRecords(const Corpus& corpus) {
  std::vector<size_t> out;
  for (size_t i = 0; i < corpus.records.size(); ++i) {
    if (corpus.records[i].split == Split::kTrain) out.push_back(i);
  }
  return out;
}

void RequireLineModelShape(const LineModel& model, int d_model) {
  const int expected_in =
      model.use_module_embedding ? 2 * d_model : d_model;
  if (model.ae.d_in() != expected_in) {
    throw Error(ErrorCode::kConfigMismatch,
                "line autoencoder expects width " +
                    std::to_string(model.ae.d_in()) + ", inputs have " +
                    std::to_string(expected_in));
  }
  const auto width = static_cast<uint32_t>(ContextSlots(model.context_window) *
                                           model.ae.d_enc());
  if (model.booster.feature_count != width) {
    throw Error(ErrorCode::kConfigMismatch,
                "line booster expects " +
                    std::to_string(model.booster.feature_count) +
                    " features, settings give " + std::to_string(width));
  }
}

Json CountsJson(const ConfusionCounts& c) {
  Json j;
  j["tp"] = c.tp;
  j["fp"] = c.fp;
  j["tn"] = c.tn;
  j["fn"] = c.fn;
  return j;
}

FeatureMatrix RowsToMatrix(const std::vector<Vector>& rows) {
  FeatureMatrix x;
  for (const Vector& r : rows) x.AppendRow(std::span<const double>(r));
  return x;
}

}  // namespace

PreprocessSummary PreprocessCorpus(Corpus& corpus,
                                   const PreprocessOptions& options) {
  PreprocessSummary summary;
  std::vector<int64_t> renames(corpus.records.size(), 0);
  std::vector<char> unterminated(corpus.records.size(), 0);
  for (size_t i = 0; i < corpus.records.size(); ++i) {
    LabeledModule& rec = corpus.records[i];
    std::string text = NormalizeLineEndings(rec.module.text);
    if (options.strip_comments) {
      bool open = false;
      text = StripComments(text, &open);
      unterminated[i] = open;
    }
    if (options.sanitize) {
      SanitizeResult s = SanitizeIdentifiers(text, options.denylist);
      renames[i] = static_cast<int64_t>(s.renames.size());
      text = std::move(s.text);
    }
    const size_t before = rec.module.lines.size();
    rec.module =
        SourceModule::FromText(rec.module.id, rec.module.base_id, text);
    if (rec.module.lines.size() != before) {
      throw Error(ErrorCode::kLabelLengthMismatch,
                  "preprocessing changed the line count of " + rec.id());
    }
    summary.renamed_identifiers += renames[i];
    summary.unterminated_comments += unterminated[i];
    ++summary.modules;
  }
  return summary;
}

void ParallelFor(size_t n, int workers,
                 const std::function<void(size_t)>& fn) {
  const size_t threads =
      std::min(n, static_cast<size_t>(std::max(workers, 1)));
  if (threads <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

size_t ExtractEmbeddings(const Corpus& corpus, const EmbeddingBackend& backend,
                         int workers, EmbeddingSet& set) {
  const BackendDescriptor desc = backend.Describe();
  const auto d = static_cast<uint32_t>(desc.d_model);
  for (EmbeddingCache* cache : {&set.modules, &set.lines}) {
    if (cache->d_model == 0 && cache->entries.empty()) cache->d_model = d;
    if (cache->d_model != d) {
      throw Error(ErrorCode::kConfigMismatch,
                  "cached embeddings have d_model " +
                      std::to_string(cache->d_model) + ", backend has " +
                      std::to_string(d));
    }
  }
  std::vector<size_t> todo;
  for (size_t i = 0; i < corpus.records.size(); ++i) {
    const LabeledModule& rec = corpus.records[i];
    bool complete = set.modules.Find(rec.id()) != nullptr;
    for (size_t l = 0; complete && l < rec.module.lines.size(); ++l) {
      complete = set.lines.Find(LineKey(rec.id(), l)) != nullptr;
    }
    if (!complete) todo.push_back(i);
  }
  std::vector<Vector> modules(todo.size());
  std::vector<std::vector<Vector>> lines(todo.size());
  ParallelFor(todo.size(), workers, [&](size_t k) {
    const LabeledModule& rec = corpus.records[todo[k]];
    modules[k] = backend.EmbedModuleText(rec.module.text);
    lines[k] = backend.EmbedLineTexts(rec.module.lines);
  });
  for (size_t k = 0; k < todo.size(); ++k) {
    const LabeledModule& rec = corpus.records[todo[k]];
    set.modules.Put(rec.id(), modules[k]);
    for (size_t l = 0; l < lines[k].size(); ++l) {
      set.lines.Put(LineKey(rec.id(), l), lines[k][l]);
    }
  }
  if (!todo.empty()) {
    LogInfo("embedded " + std::to_string(todo.size()) + " modules");
  }
  return todo.size();
}

Vector ModuleVector(const EmbeddingSet& set, const std::string& id) {
  const auto* v = set.modules.Find(id);
  if (v == nullptr) {
    throw Error(ErrorCode::kMissingEmbedding, "no module embedding for " + id,
                -1);
  }
  return ToDouble(*v);
}

std::vector<Vector> LineVectors(const EmbeddingSet& set, const std::string& id,
                                size_t n_lines) {
  std::vector<Vector> out;
  out.reserve(n_lines);
  for (size_t l = 0; l < n_lines; ++l) {
    const auto* v = set.lines.Find(LineKey(id, l));
    if (v == nullptr) {
      throw Error(ErrorCode::kMissingEmbedding,
                  "no line embedding for " + LineKey(id, l),
                  static_cast<int64_t>(l));
    }
    out.push_back(ToDouble(*v));
  }
  return out;
}

Vector BuildLineInput(std::span<const double> z_line,
                      std::span<const double> z_mod, bool use_module) {
  if (z_line.empty() || (use_module && z_line.size() != z_mod.size())) {
    throw Error(ErrorCode::kDimensionError,
                "line and module embeddings differ in width");
  }
  Vector out(z_line.begin(), z_line.end());
  if (use_module) out.insert(out.end(), z_mod.begin(), z_mod.end());
  return out;
}

int ContextSlots(int p) { return std::max(p, 1); }

void ValidateWindow(int p) {
  if (p == 0 || (p >= 3 && p % 2 == 1)) return;
  throw Error(ErrorCode::kInvalidWindow,
              "context window must be 0 or an odd number >= 3", p);
}

std::vector<Vector> BuildContextFeatures(const std::vector<Vector>& latents,
                                         int p) {
  ValidateWindow(p);
  if (p == 0) return latents;
  const size_t d = latents.empty() ? 0 : latents.front().size();
  const auto half = static_cast<int64_t>((p - 1) / 2);
  const auto n = static_cast<int64_t>(latents.size());
  std::vector<Vector> out(latents.size());
  for (int64_t i = 0; i < n; ++i) {
    Vector& f = out[static_cast<size_t>(i)];
    f.reserve(static_cast<size_t>(p) * d);
    for (int64_t j = i - half; j <= i + half; ++j) {
      if (j < 0 || j >= n) {
        f.insert(f.end(), d, 0.0);
      } else {
        const Vector& h = latents[static_cast<size_t>(j)];
        if (h.size() != d) {
          throw Error(ErrorCode::kDimensionError, "ragged latent widths");
        }
        f.insert(f.end(), h.begin(), h.end());
      }
    }
  }
  return out;
}

void ModelConfig::Validate(int d_model) const {
  ValidateWindow(context_window);
  ae.Validate();
  gbdt.Validate();
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "threshold must be in (0, 1)");
  }
  if (!(calibration_fpr >= 0.0 && calibration_fpr < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "calibration_fpr must be in [0, 1)");
  }
  if (d_enc < 1 || d_enc >= d_model || d_enc >= LineAeInputWidth(d_model)) {
    throw Error(ErrorCode::kDimensionError,
                "d_enc must satisfy 0 < d_enc < d_model", d_enc);
  }
}

void FeatureRows::Append(std::span<const double> row, int label, Split s,
                         size_t rec, int32_t line_index) {
  x.AppendRow(row);
  y.push_back(label);
  split.push_back(s);
  record.push_back(rec);
  line.push_back(line_index);
}

FeatureRows FeatureRows::Select(Split s) const {
  FeatureRows out;
  for (size_t i = 0; i < size(); ++i) {
    if (split[i] != s) continue;
    out.x.AppendRow(x.row(i));
    out.y.push_back(y[i]);
    out.split.push_back(split[i]);
    out.record.push_back(record[i]);
    out.line.push_back(line[i]);
  }
  return out;
}

void RequireTrainOnly(const FeatureRows& rows) {
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows.split[i] != Split::kTrain) {
      throw Error(ErrorCode::kInvalidArgument,
                  "test row reached a training routine",
                  static_cast<int64_t>(i));
    }
  }
}

void RequireTrainOnly(const Corpus& corpus, std::span<const size_t> records) {
  for (size_t r : records) {
    if (corpus.records[r].split != Split::kTrain) {
      throw Error(ErrorCode::kInvalidArgument,
                  "test record " + corpus.records[r].id() +
                      " reached a training routine");
    }
  }
}

AeParams TrainModuleAe(const Corpus& corpus, const EmbeddingSet& set,
                       const ModelConfig& config, AeTrainLog* log) {
  config.Validate(set.d_model());
  const auto train = TrainRecords(corpus);
  RequireTrainOnly(corpus, train);
  RowMatrix data(static_cast<Eigen::Index>(train.size()), set.d_model());
  for (size_t k = 0; k < train.size(); ++k) {
    const Vector z = ModuleVector(set, corpus.records[train[k]].id());
    data.row(static_cast<Eigen::Index>(k)) = ToEigen(z).transpose();
  }
  AeParams ae =
      AeTrain(data, config.d_enc, AeConfigFor(config, "ae.module"), log);
  RoundToFloat(ae);
  return ae;
}

AeParams TrainLineAe(const Corpus& corpus, const EmbeddingSet& set,
                     const ModelConfig& config, AeTrainLog* log) {
  config.Validate(set.d_model());
  const auto train = TrainRecords(corpus);
  RequireTrainOnly(corpus, train);
  size_t n_rows = 0;
  for (size_t r : train) n_rows += corpus.records[r].module.lines.size();
  const int width = config.LineAeInputWidth(set.d_model());
  RowMatrix data(static_cast<Eigen::Index>(n_rows), width);
  Eigen::Index row = 0;
  for (size_t r : train) {
    const LabeledModule& rec = corpus.records[r];
    const Vector z_mod = ModuleVector(set, rec.id());
    const auto z_lines = LineVectors(set, rec.id(), rec.module.lines.size());
    for (const Vector& z : z_lines) {
      data.row(row++) = ToEigen(
          BuildLineInput(z, z_mod, config.use_module_embedding)).transpose();
    }
  }
  AeParams ae =
      AeTrain(data, config.d_enc, AeConfigFor(config, "ae.line"), log);
  RoundToFloat(ae);
  return ae;
}

FeatureRows ModuleFeatures(const Corpus& corpus, const EmbeddingSet& set,
                           const AeParams& module_ae) {
  if (module_ae.d_in() != set.d_model()) {
    throw Error(ErrorCode::kConfigMismatch,
                "module autoencoder width differs from the embeddings");
  }
  FeatureRows rows;
  for (size_t i = 0; i < corpus.records.size(); ++i) {
    const LabeledModule& rec = corpus.records[i];
    const Vector z = ModuleVector(set, rec.id());
    const Vector h = FromEigen(AeEncode(module_ae, ToEigen(z)));
    rows.Append(h, rec.is_trojan ? 1 : 0, rec.split, i, -1);
  }
  return rows;
}

std::vector<Vector> LineLatents(const std::vector<Vector>& z_lines,
                                const Vector& z_mod, const AeParams& line_ae,
                                bool use_module) {
  std::vector<Vector> out;
  out.reserve(z_lines.size());
  for (const Vector& z : z_lines) {
    const Vector x = BuildLineInput(z, z_mod, use_module);
    if (static_cast<int>(x.size()) != line_ae.d_in()) {
      throw Error(ErrorCode::kConfigMismatch,
                  "line autoencoder width differs from the line input");
    }
    out.push_back(FromEigen(AeEncode(line_ae, ToEigen(x))));
  }
  return out;
}

FeatureRows LineFeatures(const Corpus& corpus, const EmbeddingSet& set,
                         const AeParams& line_ae, const ModelConfig& config) {
  ValidateWindow(config.context_window);
  std::vector<std::vector<Vector>> per_record(corpus.records.size());
  ParallelFor(corpus.records.size(), config.workers, [&](size_t i) {
    const LabeledModule& rec = corpus.records[i];
    const auto z_lines = LineVectors(set, rec.id(), rec.module.lines.size());
    const auto latents = LineLatents(z_lines, ModuleVector(set, rec.id()),
                                     line_ae, config.use_module_embedding);
    per_record[i] = BuildContextFeatures(latents, config.context_window);
  });
  FeatureRows rows;
  for (size_t i = 0; i < corpus.records.size(); ++i) {
    const LabeledModule& rec = corpus.records[i];
    for (size_t l = 0; l < per_record[i].size(); ++l) {
      rows.Append(per_record[i][l], rec.line_labels[l], rec.split, i,
                  static_cast<int32_t>(l));
    }
    per_record[i].clear();
  }
  return rows;
}

Booster TrainDetect(const FeatureRows& module_rows,
                    const ModelConfig& config) {
  const FeatureRows train = module_rows.Select(Split::kTrain);
  RequireTrainOnly(train);
  return TrainBinary(train.x, train.y, GbdtConfigFor(config, "gbdt.detect"));
}

MulticlassBooster TrainTypes(const Corpus& corpus,
                             const FeatureRows& module_rows,
                             const ModelConfig& config) {
  FeatureRows train;
  for (size_t i = 0; i < module_rows.size(); ++i) {
    const LabeledModule& rec = corpus.records[module_rows.record[i]];
    if (module_rows.split[i] != Split::kTrain || !rec.is_trojan) continue;
    train.Append(std::vector<double>(module_rows.x.row(i).begin(),
                                     module_rows.x.row(i).end()),
                 static_cast<int>(*rec.trojan_type), Split::kTrain,
                 module_rows.record[i], -1);
  }
  RequireTrainOnly(train);
  return TrainMulticlass(train.x, train.y, kNumTrojanTypes,
                         GbdtConfigFor(config, "gbdt.type"));
}

Booster TrainLineBooster(const FeatureRows& line_rows,
                         const ModelConfig& config) {
  RequireTrainOnly(line_rows);
  GbdtConfig g = GbdtConfigFor(config, "gbdt.line");
  g.positive_class_weight = config.line_positive_weight;
  return TrainBinary(line_rows.x, line_rows.y, g);
}

ModuleModels TrainModuleModels(const Corpus& corpus, const EmbeddingSet& set,
                               const ModelConfig& config) {
  return TrainModuleModels(corpus, set, config,
                           TrainModuleAe(corpus, set, config));
}

ModuleModels TrainModuleModels(const Corpus& corpus, const EmbeddingSet& set,
                               const ModelConfig& config, AeParams module_ae) {
  config.Validate(set.d_model());
  ModuleModels models;
  models.ae = std::move(module_ae);
  const FeatureRows rows = ModuleFeatures(corpus, set, models.ae);
  models.detect = TrainDetect(rows, config);
  models.type = TrainTypes(corpus, rows, config);
  return models;
}

double CalibrateThreshold(std::span<const double> clean_scores, double fpr) {
  if (clean_scores.empty()) {
    throw Error(ErrorCode::kEmptyData, "no clean scores to calibrate on");
  }
  std::vector<double> sorted(clean_scores.begin(), clean_scores.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const auto allowed = static_cast<size_t>(
      std::floor(fpr * static_cast<double>(sorted.size())));
  if (allowed >= sorted.size()) return 0.0;
  return std::nextafter(sorted[allowed], std::numeric_limits<double>::max());
}

LineModel TrainLineModel(const Corpus& corpus, const EmbeddingSet& set,
                         const ModelConfig& config) {
  return TrainLineModel(corpus, set, config, TrainLineAe(corpus, set, config));
}

LineModel TrainLineModel(const Corpus& corpus, const EmbeddingSet& set,
                         const ModelConfig& config, AeParams line_ae) {
  config.Validate(set.d_model());
  LineModel model;
  model.use_module_embedding = config.use_module_embedding;
  model.context_window = config.context_window;
  model.threshold = config.threshold;
  model.ae = std::move(line_ae);
  const FeatureRows train =
      LineFeatures(corpus, set, model.ae, config).Select(Split::kTrain);
  if (config.calibration_fpr <= 0.0) {
    model.booster = TrainLineBooster(train, config);
    return model;
  }
  // Group-aware hold-out among train records.
  Corpus train_part;
  const auto train_records = TrainRecords(corpus);
  for (size_t r : train_records) train_part.records.push_back(corpus.records[r]);
  SplitOptions opts;
  opts.train_fraction = 0.9;
  opts.seed = DeriveSeed(config.seed, "calibration");
  const auto parts = SplitCorpus(train_part, opts);
  std::vector<char> held(corpus.records.size(), 0);
  for (size_t k = 0; k < train_records.size(); ++k) {
    held[train_records[k]] = parts[k] == Split::kTest;
  }
  FeatureRows fit;
  FeatureRows calib;
  for (size_t i = 0; i < train.size(); ++i) {
    FeatureRows& dst = held[train.record[i]] ? calib : fit;
    dst.x.AppendRow(train.x.row(i));
    dst.y.push_back(train.y[i]);
    dst.split.push_back(train.split[i]);
    dst.record.push_back(train.record[i]);
    dst.line.push_back(train.line[i]);
  }
  model.booster = TrainLineBooster(fit, config);
  const auto proba = PredictProba(model.booster, calib.x);
  std::vector<double> clean;
  for (size_t i = 0; i < calib.size(); ++i) {
    if (calib.y[i] == 0) clean.push_back(proba[i]);
  }
  model.calibrated_threshold =
      CalibrateThreshold(clean, config.calibration_fpr);
  LogInfo("calibrated line threshold " +
          std::to_string(*model.calibrated_threshold) + " on " +
          std::to_string(clean.size()) + " clean lines");
  return model;
}

Json BinaryMetricsJson(const BinaryMetrics& m) {
  Json j;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1_trojan"] = m.f1;
  j["f1_clean"] = m.f1_clean;
  j["f1_macro"] = m.f1_macro();
  j["accuracy"] = m.accuracy;
  j["undefined"] = {{"precision", m.precision_undefined},
                    {"recall", m.recall_undefined},
                    {"f1", m.f1_undefined}};
  return j;
}

Json ConfigEcho(const ModelConfig& config) {
  Json j;
  j["m"] = config.use_module_embedding ? 1 : 0;
  j["p"] = config.context_window;
  j["d_enc"] = config.d_enc;
  j["threshold"] = config.threshold;
  j["seed"] = config.seed;
  j["seeds"] = {{"ae.module", DeriveSeed(config.seed, "ae.module")},
                {"ae.line", DeriveSeed(config.seed, "ae.line")},
                {"gbdt.detect", DeriveSeed(config.seed, "gbdt.detect")},
                {"gbdt.type", DeriveSeed(config.seed, "gbdt.type")},
                {"gbdt.line", DeriveSeed(config.seed, "gbdt.line")}};
  j["ae"] = {{"learning_rate", config.ae.learning_rate},
             {"batch_size", config.ae.batch_size},
             {"max_epochs", config.ae.max_epochs},
             {"patience", config.ae.patience}};
  j["gbdt"] = {{"n_trees", config.gbdt.n_trees},
               {"max_depth", config.gbdt.max_depth},
               {"learning_rate", config.gbdt.learning_rate},
               {"lambda", config.gbdt.lambda},
               {"gamma", config.gbdt.gamma},
               {"min_child_weight", config.gbdt.min_child_weight},
               {"growth", config.gbdt.growth == TreeGrowth::kDepthWise
                              ? "depthwise"
                              : "leafwise"}};
  return j;
}

DetectReport EvaluateDetect(const Corpus& corpus, const FeatureRows& rows,
                            const Booster& booster,
                            const ModelConfig& config) {
  const FeatureRows test = rows.Select(Split::kTest);
  const auto pred = Predict(booster, test.x, config.threshold);
  DetectReport report;
  report.metrics = ComputeBinaryMetrics(test.y, pred);
  int64_t hit[kNumTrojanTypes] = {0, 0, 0, 0};
  int64_t support[kNumTrojanTypes] = {0, 0, 0, 0};
  for (size_t i = 0; i < test.size(); ++i) {
    const LabeledModule& rec = corpus.records[test.record[i]];
    if (!rec.is_trojan) continue;
    const auto t = static_cast<size_t>(*rec.trojan_type);
    ++support[t];
    hit[t] += pred[i];
  }
  Json per_type;
  for (TrojanType t : kAllTrojanTypes) {
    const auto k = static_cast<size_t>(t);
    report.type_recall[k] =
        support[k] == 0 ? 0.0
                        : static_cast<double>(hit[k]) /
                              static_cast<double>(support[k]);
    per_type[std::string(TrojanTypeName(t))] = {
        {"recall", report.type_recall[k]}, {"support", support[k]}};
  }
  Json& j = report.json;
  j["task"] = "detect";
  j["config"] = ConfigEcho(config);
  j["test_modules"] = test.size();
  j["metrics"] = BinaryMetricsJson(report.metrics);
  j["confusion"] = CountsJson(report.metrics.counts);
  j["per_type"] = per_type;
  return report;
}

TypeReport EvaluateTypes(const Corpus& corpus, const FeatureRows& rows,
                         const MulticlassBooster& booster,
                         const ModelConfig& config) {
  FeatureMatrix x;
  std::vector<int> truth;
  for (size_t i = 0; i < rows.size(); ++i) {
    const LabeledModule& rec = corpus.records[rows.record[i]];
    if (rows.split[i] != Split::kTest || !rec.is_trojan) continue;
    x.AppendRow(rows.x.row(i));
    truth.push_back(static_cast<int>(*rec.trojan_type));
  }
  const auto pred = Predict(booster, x);
  TypeReport report;
  report.metrics = ComputeMacroMetrics(truth, pred, kNumTrojanTypes);
  const MacroMetrics& m = report.metrics;
  Json per_type;
  for (TrojanType t : kAllTrojanTypes) {
    const ClassMetrics& c = m.per_class[static_cast<size_t>(t)];
    per_type[std::string(TrojanTypeName(t))] = {{"precision", c.precision},
                                                {"recall", c.recall},
                                                {"f1", c.f1},
                                                {"support", c.support}};
  }
  Json& j = report.json;
  j["task"] = "type";
  j["config"] = ConfigEcho(config);
  j["test_modules"] = truth.size();
  j["metrics"] = {{"accuracy", m.accuracy},
                  {"precision_macro", m.precision_macro},
                  {"recall_macro", m.recall_macro},
                  {"f1_macro", m.f1_macro}};
  j["confusion"] = m.confusion;
  j["per_type"] = per_type;
  return report;
}

LocalizationReport Localize(const std::string& module_id,
                            const std::vector<Vector>& z_lines,
                            const Vector& z_mod, const LineModel& model,
                            const LineMask* truth) {
  ValidateWindow(model.context_window);
  RequireLineModelShape(model, static_cast<int>(z_mod.size()));
  if (truth != nullptr && truth->size() != z_lines.size()) {
    throw Error(ErrorCode::kLabelLengthMismatch,
                "truth mask length differs from line count");
  }
  const auto latents =
      LineLatents(z_lines, z_mod, model.ae, model.use_module_embedding);
  const FeatureMatrix x =
      RowsToMatrix(BuildContextFeatures(latents, model.context_window));
  const auto proba = PredictProba(model.booster, x);
  LocalizationReport report;
  report.module_id = module_id;
  report.threshold = model.report_threshold();
  for (size_t i = 0; i < proba.size(); ++i) {
    LineScore s;
    s.index = i;
    s.score = proba[i];
    s.predicted = proba[i] >= report.threshold ? 1 : 0;
    if (truth != nullptr) s.truth = (*truth)[i];
    report.lines.push_back(s);
  }
  report.ranking = RankByScore(proba);
  return report;
}

LineReport EvaluateLines(const Corpus& corpus, const EmbeddingSet& set,
                         const LineModel& model, const ModelConfig& config) {
  std::vector<size_t> test;
  for (size_t i = 0; i < corpus.records.size(); ++i) {
    if (corpus.records[i].split == Split::kTest) test.push_back(i);
  }
  std::vector<std::vector<double>> scores(test.size());
  ParallelFor(test.size(), config.workers, [&](size_t k) {
    const LabeledModule& rec = corpus.records[test[k]];
    const auto z_lines = LineVectors(set, rec.id(), rec.module.lines.size());
    const auto rep =
        Localize(rec.id(), z_lines, ModuleVector(set, rec.id()), model);
    for (const LineScore& s : rep.lines) scores[k].push_back(s.score);
  });

  LineReport report;
  std::vector<int> truth_all;
  std::vector<int> pred_all;
  std::vector<int> truth_type[kNumTrojanTypes];
  std::vector<int> pred_type[kNumTrojanTypes];
  double covered = 0.0;
  int64_t positives = 0;
  for (size_t k = 0; k < test.size(); ++k) {
    const LabeledModule& rec = corpus.records[test[k]];
    std::vector<int> truth(rec.line_labels.begin(), rec.line_labels.end());
    std::vector<int> pred(truth.size());
    for (size_t l = 0; l < truth.size(); ++l) {
      pred[l] = scores[k][l] >= model.threshold ? 1 : 0;
    }
    truth_all.insert(truth_all.end(), truth.begin(), truth.end());
    pred_all.insert(pred_all.end(), pred.begin(), pred.end());
    if (!rec.is_trojan) continue;
    const auto t = static_cast<size_t>(*rec.trojan_type);
    truth_type[t].insert(truth_type[t].end(), truth.begin(), truth.end());
    pred_type[t].insert(pred_type[t].end(), pred.begin(), pred.end());
    const auto n_pos = std::count(truth.begin(), truth.end(), 1);
    if (n_pos > 0) {
      covered += TopFractionCoverage(scores[k], truth, 10.0) *
                 static_cast<double>(n_pos);
      positives += n_pos;
    }
  }
  report.metrics = ComputeBinaryMetrics(truth_all, pred_all);
  report.top10_coverage =
      positives == 0 ? 0.0 : covered / static_cast<double>(positives);
  Json per_type;
  for (TrojanType t : kAllTrojanTypes) {
    const auto i = static_cast<size_t>(t);
    if (!truth_type[i].empty()) {
      report.per_type[i] = ComputeBinaryMetrics(truth_type[i], pred_type[i]);
    }
    per_type[std::string(TrojanTypeName(t))] =
        BinaryMetricsJson(report.per_type[i]);
  }
  Json& j = report.json;
  j["task"] = "line";
  j["config"] = ConfigEcho(config);
  j["test_modules"] = test.size();
  j["test_lines"] = truth_all.size();
  j["metrics"] = BinaryMetricsJson(report.metrics);
  j["metrics"]["top10_coverage"] = report.top10_coverage;
  j["confusion"] = CountsJson(report.metrics.counts);
  j["per_type"] = per_type;
  if (model.calibrated_threshold) {
    j["calibrated_threshold"] = *model.calibrated_threshold;
  }
  return report;
}

Json LocalizationJson(const LocalizationReport& report) {
  Json j;
  j["module"] = report.module_id;
  j["threshold"] = report.threshold;
  Json ranked = Json::array();
  for (size_t rank = 0; rank < report.ranking.size(); ++rank) {
    const LineScore& s = report.lines[report.ranking[rank]];
    Json line;
    line["rank"] = rank + 1;
    line["index"] = s.index;
    line["score"] = s.score;
    line["predicted"] = s.predicted;
    if (s.truth) line["truth"] = *s.truth;
    ranked.push_back(std::move(line));
  }
  j["lines"] = std::move(ranked);
  return j;
}

std::string RenderLocalization(const LocalizationReport& report,
                               const std::vector<std::string>& lines) {
  std::vector<size_t> rank_of(report.lines.size(), 0);
  for (size_t r = 0; r < report.ranking.size(); ++r) {
    rank_of[report.ranking[r]] = r + 1;
  }
  std::ostringstream out;
  out << "module " << report.module_id << "  threshold " << std::fixed
      << std::setprecision(4) << report.threshold << "\n";
  for (const LineScore& s : report.lines) {
    out << std::setw(5) << s.index + 1 << "  " << std::setw(6) << s.score
        << "  #" << std::left << std::setw(5) << rank_of[s.index]
        << std::right << (s.predicted ? '*' : ' ');
    if (s.truth) out << (*s.truth ? 'T' : '.');
    out << " | " << (s.index < lines.size() ? lines[s.index] : "") << "\n";
  }
  return out.str();
}

}  // namespace trojanloc
