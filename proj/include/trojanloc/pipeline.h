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

#ifndef TROJANLOC_PIPELINE_H_
#define TROJANLOC_PIPELINE_H_

// End-to-end assembly: embedding extraction into caches, autoencoder
// inputs, context-window line features, task classifiers and reports.
//
// Every feature row carries the split of the record it came from; training
// entry points refuse rows that are not tagged train.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "trojanloc/autoencoder.h"
#include "trojanloc/corpus.h"
#include "trojanloc/embed.h"
#include "trojanloc/embedding_cache.h"
#include "trojanloc/gbdt.h"
#include "trojanloc/metrics.h"
#include "trojanloc/text.h"

namespace trojanloc {

using Json = nlohmann::ordered_json;

struct PreprocessOptions {
  bool strip_comments = true;
  bool sanitize = true;
  std::vector<std::string> denylist = DefaultDenylist();
};

struct PreprocessSummary {
  int64_t modules = 0;
  int64_t renamed_identifiers = 0;
  int64_t unterminated_comments = 0;
};

// Strips comments and sanitizes identifiers in every record, keeping line
// counts (and therefore line labels) intact. Throws kLabelLengthMismatch if
// a transform ever changed a line count.
PreprocessSummary PreprocessCorpus(Corpus& corpus,
                                   const PreprocessOptions& options = {});

// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
// thrown by any task is rethrown after all threads have joined.
void ParallelFor(size_t n, int workers, const std::function<void(size_t)>& fn);

// Module vectors keyed by module id, line vectors keyed by LineKey.
struct EmbeddingSet {
  EmbeddingCache modules;
  EmbeddingCache lines;

  int d_model() const { return static_cast<int>(modules.d_model); }
  bool operator==(const EmbeddingSet&) const = default;
};

// Computes embeddings for every record missing from `set`. Returns the number
// of records embedded. Throws kConfigMismatch when `set` already holds a
// different d_model than the backend.
size_t ExtractEmbeddings(const Corpus& corpus, const EmbeddingBackend& backend,
                         int workers, EmbeddingSet& set);

// Errors: kMissingEmbedding (detail = line index, -1 for the module vector).
Vector ModuleVector(const EmbeddingSet& set, const std::string& id);
std::vector<Vector> LineVectors(const EmbeddingSet& set, const std::string& id,
                                size_t n_lines);

// [z_line ; z_mod], or z_line alone when use_module is false.
// Errors: kDimensionError.
Vector BuildLineInput(std::span<const double> z_line,
                      std::span<const double> z_mod, bool use_module);

// Width multiplier of a context window: max(p, 1).
int ContextSlots(int p);
// Throws kInvalidWindow unless p == 0 or p is odd and >= 3.
void ValidateWindow(int p);
// Feature i concatenates latents i-(p-1)/2 .. i+(p-1)/2, zero-filled outside
// the module; p = 0 yields the latent itself.
std::vector<Vector> BuildContextFeatures(const std::vector<Vector>& latents,
                                         int p);

struct ModelConfig {
  int d_enc = 32;
  AeTrainConfig ae;
  GbdtConfig gbdt;
  // Line booster positive weight; <= 0 means negative/positive ratio.
  double line_positive_weight = 0.0;
  bool use_module_embedding = true;  // m
  int context_window = 3;            // p
  double threshold = 0.5;
  // Target false-positive rate for the calibrated localization threshold;
  // 0 disables calibration.
  double calibration_fpr = 0.0;
  uint64_t seed = 0;
  int workers = 1;

  // Checks window, threshold and 0 < d_enc < autoencoder input widths.
  void Validate(int d_model) const;
  int LineAeInputWidth(int d_model) const {
    return use_module_embedding ? 2 * d_model : d_model;
  }
  int LineFeatureWidth() const { return ContextSlots(context_window) * d_enc; }
};

struct FeatureRows {
  FeatureMatrix x;
  std::vector<int> y;
  std::vector<Split> split;
  std::vector<size_t> record;  // index into corpus.records
  std::vector<int32_t> line;   // -1 for module rows

  size_t size() const { return y.size(); }
  void Append(std::span<const double> row, int label, Split s, size_t rec,
              int32_t line_index);
  FeatureRows Select(Split s) const;
};

// Throws kInvalidArgument when any row is not tagged train.
void RequireTrainOnly(const FeatureRows& rows);
void RequireTrainOnly(const Corpus& corpus, std::span<const size_t> records);

// Autoencoders are fit on train records only.
AeParams TrainModuleAe(const Corpus& corpus, const EmbeddingSet& set,
                       const ModelConfig& config, AeTrainLog* log = nullptr);
AeParams TrainLineAe(const Corpus& corpus, const EmbeddingSet& set,
                     const ModelConfig& config, AeTrainLog* log = nullptr);

// One row per record: h_mod, label is_trojan.
FeatureRows ModuleFeatures(const Corpus& corpus, const EmbeddingSet& set,
                           const AeParams& module_ae);
// Line latents of one module.
std::vector<Vector> LineLatents(const std::vector<Vector>& z_lines,
                                const Vector& z_mod, const AeParams& line_ae,
                                bool use_module);
// One row per line of every record, label = line label.
FeatureRows LineFeatures(const Corpus& corpus, const EmbeddingSet& set,
                         const AeParams& line_ae, const ModelConfig& config);

struct ModuleModels {
  AeParams ae;
  Booster detect;
  MulticlassBooster type;
};

struct LineModel {
  AeParams ae;
  Booster booster;
  bool use_module_embedding = true;
  int context_window = 3;
  double threshold = 0.5;
  std::optional<double> calibrated_threshold;

  // Threshold used for reports: the calibrated one when present.
  double report_threshold() const {
    return calibrated_threshold.value_or(threshold);
  }
};

Booster TrainDetect(const FeatureRows& module_rows, const ModelConfig& config);
// Uses Trojaned train rows only; labels are Trojan types.
MulticlassBooster TrainTypes(const Corpus& corpus,
                             const FeatureRows& module_rows,
                             const ModelConfig& config);
Booster TrainLineBooster(const FeatureRows& line_rows,
                         const ModelConfig& config);

ModuleModels TrainModuleModels(const Corpus& corpus, const EmbeddingSet& set,
                               const ModelConfig& config);
// Same, reusing an already trained module autoencoder.
ModuleModels TrainModuleModels(const Corpus& corpus, const EmbeddingSet& set,
                               const ModelConfig& config, AeParams module_ae);
// With calibration enabled, a tenth of the train designs are held out: the
// booster is fit on the rest and the threshold is chosen on the held-out
// clean lines.
LineModel TrainLineModel(const Corpus& corpus, const EmbeddingSet& set,
                         const ModelConfig& config);
LineModel TrainLineModel(const Corpus& corpus, const EmbeddingSet& set,
                         const ModelConfig& config, AeParams line_ae);

// Smallest threshold letting at most floor(fpr * n) of the scores reach it.
double CalibrateThreshold(std::span<const double> clean_scores, double fpr);

struct DetectReport {
  BinaryMetrics metrics;
  // Recall of each Trojan type among test modules.
  double type_recall[kNumTrojanTypes] = {0, 0, 0, 0};
  Json json;
};
struct TypeReport {
  MacroMetrics metrics;
  Json json;
};
struct LineReport {
  BinaryMetrics metrics;
  BinaryMetrics per_type[kNumTrojanTypes];
  // Fraction of Trojan lines ranked in the top 10% of their module.
  double top10_coverage = 0.0;
  Json json;
};

// Evaluation on the test split.
DetectReport EvaluateDetect(const Corpus& corpus, const FeatureRows& rows,
                            const Booster& booster, const ModelConfig& config);
TypeReport EvaluateTypes(const Corpus& corpus, const FeatureRows& rows,
                         const MulticlassBooster& booster,
                         const ModelConfig& config);
LineReport EvaluateLines(const Corpus& corpus, const EmbeddingSet& set,
                         const LineModel& model, const ModelConfig& config);

struct LineScore {
  size_t index = 0;
  double score = 0.0;
  int predicted = 0;
  std::optional<int> truth;
};

struct LocalizationReport {
  std::string module_id;
  double threshold = 0.5;
  std::vector<LineScore> lines;  // by line index
  std::vector<size_t> ranking;   // line indices by descending score
};

// Scores every line of one module. Throws kConfigMismatch when the model's
// widths disagree with its settings or with the embeddings.
LocalizationReport Localize(const std::string& module_id,
                            const std::vector<Vector>& z_lines,
                            const Vector& z_mod, const LineModel& model,
                            const LineMask* truth = nullptr);
Json LocalizationJson(const LocalizationReport& report);
// Source listing with rank and score per line.
std::string RenderLocalization(const LocalizationReport& report,
                               const std::vector<std::string>& lines);

Json ConfigEcho(const ModelConfig& config);
Json BinaryMetricsJson(const BinaryMetrics& m);

}  // namespace trojanloc

#endif  // TROJANLOC_PIPELINE_H_
