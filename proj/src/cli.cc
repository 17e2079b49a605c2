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

#include "trojanloc/cli.h"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "trojanloc/binary_io.h"
#include "trojanloc/config.h"
#include "trojanloc/corpus.h"
#include "trojanloc/fixtures.h"
#include "trojanloc/log.h"
#include "trojanloc/pipeline.h"

namespace trojanloc {
namespace fs = std::filesystem;

ArtifactPaths::ArtifactPaths(const fs::path& work_dir)
    : corpus(work_dir / "corpus.jsonl"),
      module_cache(work_dir / "embeddings" / "modules.tlec"),
      line_cache(work_dir / "embeddings" / "lines.tlec"),
      module_ae(work_dir / "models" / "module_ae.tlae"),
      line_ae(work_dir / "models" / "line_ae.tlae"),
      detect(work_dir / "models" / "detect.tlgb"),
      type(work_dir / "models" / "type.tlgm"),
      line(work_dir / "models" / "line.tlgb"),
      line_meta(work_dir / "models" / "line_model.json"),
      reports(work_dir / "reports") {}

fs::path ArtifactPaths::Report(const std::string& task) const {
  return reports / (task + ".json");
}

fs::path ArtifactPaths::Localization(const std::string& module_id,
                                     const std::string& ext) const {
  return reports / "localize" / (module_id + ext);
}

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIoError:
    case ErrorCode::kBackendFailure:
    case ErrorCode::kConnectFailed:
    case ErrorCode::kMalformedResponse:
    case ErrorCode::kServerError:
    case ErrorCode::kTimeout:
    case ErrorCode::kLengthMismatch:
    case ErrorCode::kBadMagic:
    case ErrorCode::kVersionUnsupported:
    case ErrorCode::kTruncatedFile:
      return 2;
    default:
      return 1;
  }
}

namespace {

struct GlobalFlags {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<int> workers;
  std::string backend;
  std::string work_dir;
  bool no_cache = false;
  bool quiet = false;
  bool verbose = false;
};

struct Context {
  RunConfig config;
  ArtifactPaths paths{"work"};
  bool no_cache = false;
  std::ostream* out = nullptr;
};

void Require(const fs::path& path, const std::string& stage) {
  if (!fs::exists(path)) {
    throw Error(ErrorCode::kMissingArtifact,
                path.string() + " is missing; run `" + stage + "` first");
  }
}

void WriteText(const fs::path& path, const std::string& text) {
  WriteFileBytes(path, text);
}

std::string Dump(const Json& j) { return j.dump(2) + "\n"; }

Corpus LoadWorkCorpus(const Context& ctx) {
  Require(ctx.paths.corpus, "preprocess");
  return LoadManifest(ctx.paths.corpus);
}

EmbeddingSet LoadEmbeddings(const Context& ctx) {
  Require(ctx.paths.module_cache, "embed");
  Require(ctx.paths.line_cache, "embed");
  EmbeddingSet set;
  set.modules = ReadCache(ctx.paths.module_cache);
  set.lines = ReadCache(ctx.paths.line_cache);
  if (set.modules.d_model != set.lines.d_model) {
    throw Error(ErrorCode::kConfigMismatch,
                "module and line caches differ in d_model");
  }
  return set;
}

Json LineMeta(const LineModel& model, int d_model) {
  Json j;
  j["m"] = model.use_module_embedding ? 1 : 0;
  j["p"] = model.context_window;
  j["d_enc"] = model.ae.d_enc();
  j["d_model"] = d_model;
  j["threshold"] = model.threshold;
  if (model.calibrated_threshold) {
    j["calibrated_threshold"] = *model.calibrated_threshold;
  } else {
    j["calibrated_threshold"] = nullptr;
  }
  return j;
}

// Loads the line model and checks it against the configured settings.
LineModel LoadLineModel(const Context& ctx, int d_model) {
  Require(ctx.paths.line_meta, "train");
  Require(ctx.paths.line, "train");
  Require(ctx.paths.line_ae, "train-ae");
  std::ifstream in(ctx.paths.line_meta);
  Json meta;
  try {
    meta = Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kIoError,
                ctx.paths.line_meta.string() + ": " + e.what());
  }
  const ModelConfig& mc = ctx.config.model;
  const int m = mc.use_module_embedding ? 1 : 0;
  if (meta.value("m", -1) != m || meta.value("p", -1) != mc.context_window ||
      meta.value("d_enc", -1) != mc.d_enc ||
      meta.value("d_model", -1) != d_model) {
    throw Error(ErrorCode::kConfigMismatch,
                "trained line model " + meta.dump() +
                    " does not match the configured m, p, d_enc or d_model");
  }
  LineModel model;
  model.ae = LoadAe(ctx.paths.line_ae);
  model.booster = LoadBooster(ctx.paths.line);
  model.use_module_embedding = mc.use_module_embedding;
  model.context_window = mc.context_window;
  model.threshold = meta.value("threshold", mc.threshold);
  if (meta.contains("calibrated_threshold") &&
      !meta["calibrated_threshold"].is_null()) {
    model.calibrated_threshold = meta["calibrated_threshold"].get<double>();
  }
  return model;
}

void CmdFixtures(Context& ctx, int bases, const std::string& out_path) {
  const fs::path out = out_path.empty() ? ctx.config.paths.corpus
                                        : fs::path(out_path);
  const int n = bases > 0 ? bases : ctx.config.fixture_bases;
  const Corpus corpus = GenerateFixtureCorpus(n, ctx.config.seed);
  SaveManifest(corpus, out);
  LogInfo("wrote " + std::to_string(corpus.records.size()) + " records to " +
          out.string());
}

void CmdPreprocess(Context& ctx, const std::string& in_path) {
  const fs::path in = in_path.empty() ? ctx.config.paths.corpus
                                      : fs::path(in_path);
  Require(in, "fixtures");
  Corpus corpus = LoadManifest(in);
  ValidateCorpus(corpus);
  const PreprocessSummary s = PreprocessCorpus(corpus, ctx.config.preprocess);
  SplitOptions opts;
  opts.train_fraction = ctx.config.train_fraction;
  opts.seed = ctx.config.seed;
  opts.group_by_base = ctx.config.group_by_base;
  ApplySplit(corpus, opts);
  for (const std::string& base : ExternalBases(corpus)) {
    LogWarning("Trojaned records reference base " + base +
               " which has no clean record");
  }
  SaveManifest(corpus, ctx.paths.corpus);
  LogInfo("preprocessed " + std::to_string(s.modules) + " modules, " +
          std::to_string(s.renamed_identifiers) + " renames");
}

void CmdEmbed(Context& ctx) {
  const Corpus corpus = LoadWorkCorpus(ctx);
  EmbeddingSet set;
  if (!ctx.no_cache && fs::exists(ctx.paths.module_cache) &&
      fs::exists(ctx.paths.line_cache)) {
    set.modules = ReadCache(ctx.paths.module_cache);
    set.lines = ReadCache(ctx.paths.line_cache);
  }
  const auto backend = MakeBackend(ctx.config);
  const size_t computed =
      ExtractEmbeddings(corpus, *backend, ctx.config.workers, set);
  // Drop entries of records no longer in the corpus.
  std::set<std::string> keep;
  for (const auto& r : corpus.records) {
    keep.insert(r.id());
    for (size_t l = 0; l < r.module.lines.size(); ++l) {
      keep.insert(LineKey(r.id(), l));
    }
  }
  for (EmbeddingCache* c : {&set.modules, &set.lines}) {
    std::erase_if(c->entries,
                  [&](const auto& kv) { return !keep.count(kv.first); });
  }
  WriteCache(ctx.paths.module_cache, set.modules);
  WriteCache(ctx.paths.line_cache, set.lines);
  LogInfo("embedding caches hold " + std::to_string(set.modules.entries.size()) +
          " modules (" + std::to_string(computed) + " computed now)");
}

void CmdTrainAe(Context& ctx) {
  const Corpus corpus = LoadWorkCorpus(ctx);
  const EmbeddingSet set = LoadEmbeddings(ctx);
  const ModelConfig mc = ctx.config.EffectiveModel();
  AeTrainLog log;
  SaveAe(ctx.paths.module_ae, TrainModuleAe(corpus, set, mc, &log));
  LogInfo("module autoencoder: loss " + std::to_string(log.initial_train_loss) +
          " -> " +
          std::to_string(log.train_loss.empty() ? log.initial_train_loss
                                                : log.train_loss.back()));
  SaveAe(ctx.paths.line_ae, TrainLineAe(corpus, set, mc, &log));
  LogInfo("line autoencoder: loss " + std::to_string(log.initial_train_loss) +
          " -> " +
          std::to_string(log.train_loss.empty() ? log.initial_train_loss
                                                : log.train_loss.back()));
}

void CmdTrain(Context& ctx) {
  const Corpus corpus = LoadWorkCorpus(ctx);
  const EmbeddingSet set = LoadEmbeddings(ctx);
  Require(ctx.paths.module_ae, "train-ae");
  Require(ctx.paths.line_ae, "train-ae");
  const ModelConfig mc = ctx.config.EffectiveModel();
  AeParams module_ae = LoadAe(ctx.paths.module_ae);
  AeParams line_ae = LoadAe(ctx.paths.line_ae);
  if (line_ae.d_in() != mc.LineAeInputWidth(set.d_model()) ||
      line_ae.d_enc() != mc.d_enc || module_ae.d_enc() != mc.d_enc) {
    throw Error(ErrorCode::kConfigMismatch,
                "autoencoders do not match the configured m or d_enc; rerun "
                "train-ae");
  }
  const ModuleModels mm =
      TrainModuleModels(corpus, set, mc, std::move(module_ae));
  SaveBooster(ctx.paths.detect, mm.detect);
  SaveMulticlass(ctx.paths.type, mm.type);
  LogInfo("trained module classifiers");
  const LineModel lm = TrainLineModel(corpus, set, mc, std::move(line_ae));
  SaveBooster(ctx.paths.line, lm.booster);
  WriteText(ctx.paths.line_meta, Dump(LineMeta(lm, set.d_model())));
  LogInfo("trained line classifier");
}

void CmdEvaluate(Context& ctx) {
  const Corpus corpus = LoadWorkCorpus(ctx);
  Require(ctx.paths.detect, "train");
  Require(ctx.paths.type, "train");
  Require(ctx.paths.module_ae, "train-ae");
  const EmbeddingSet set = LoadEmbeddings(ctx);
  const ModelConfig mc = ctx.config.EffectiveModel();
  const LineModel lm = LoadLineModel(ctx, set.d_model());
  const AeParams module_ae = LoadAe(ctx.paths.module_ae);
  const Booster detect = LoadBooster(ctx.paths.detect);
  const MulticlassBooster type = LoadMulticlass(ctx.paths.type);
  if (module_ae.d_enc() != static_cast<int>(detect.feature_count)) {
    throw Error(ErrorCode::kConfigMismatch,
                "module classifier width differs from the autoencoder");
  }

  const FeatureRows rows = ModuleFeatures(corpus, set, module_ae);
  const DetectReport d = EvaluateDetect(corpus, rows, detect, mc);
  const TypeReport t = EvaluateTypes(corpus, rows, type, mc);
  const LineReport l = EvaluateLines(corpus, set, lm, mc);
  WriteText(ctx.paths.Report("detect"), Dump(d.json));
  WriteText(ctx.paths.Report("type"), Dump(t.json));
  WriteText(ctx.paths.Report("line"), Dump(l.json));

  Json summary;
  summary["detect"] = {{"f1_trojan", d.metrics.f1},
                       {"accuracy", d.metrics.accuracy}};
  summary["type"] = {{"f1_macro", t.metrics.f1_macro},
                     {"accuracy", t.metrics.accuracy}};
  summary["line"] = {{"f1_trojan", l.metrics.f1},
                     {"f1_clean", l.metrics.f1_clean},
                     {"f1_macro", l.metrics.f1_macro()},
                     {"top10_coverage", l.top10_coverage}};
  *ctx.out << Dump(summary);
}

void CmdLocalize(Context& ctx, const std::vector<std::string>& modules,
                 const std::string& file, bool text) {
  auto emit = [&](const LocalizationReport& rep,
                  const std::vector<std::string>& lines) {
    WriteText(ctx.paths.Localization(rep.module_id, ".json"),
              Dump(LocalizationJson(rep)));
    if (text) {
      const std::string rendered = RenderLocalization(rep, lines);
      WriteText(ctx.paths.Localization(rep.module_id, ".txt"), rendered);
    }
    const size_t top = std::min<size_t>(3, rep.ranking.size());
    *ctx.out << rep.module_id << ":";
    for (size_t i = 0; i < top; ++i) {
      *ctx.out << " " << rep.ranking[i] + 1;
    }
    *ctx.out << "\n";
  };

  if (!file.empty()) {
    // Arbitrary source file: preprocess and embed on the fly.
    const auto backend = MakeBackend(ctx.config);
    const LineModel lm = LoadLineModel(ctx, backend->Describe().d_model);
    std::string source = ReadFileBytes(file);
    Corpus one;
    LabeledModule rec;
    const std::string id = fs::path(file).stem().string();
    rec.module = SourceModule::FromText(id, id, source);
    rec.line_labels.assign(rec.module.lines.size(), 0);
    one.records.push_back(std::move(rec));
    PreprocessCorpus(one, ctx.config.preprocess);
    EmbeddingSet set;
    ExtractEmbeddings(one, *backend, 1, set);
    const LabeledModule& r = one.records.front();
    emit(Localize(id, LineVectors(set, id, r.module.lines.size()),
                  ModuleVector(set, id), lm),
         r.module.lines);
    return;
  }

  const Corpus corpus = LoadWorkCorpus(ctx);
  const EmbeddingSet set = LoadEmbeddings(ctx);
  const LineModel lm = LoadLineModel(ctx, set.d_model());
  std::vector<const LabeledModule*> targets;
  for (const auto& r : corpus.records) {
    const bool wanted =
        modules.empty()
            ? r.split == Split::kTest
            : std::find(modules.begin(), modules.end(), r.id()) !=
                  modules.end();
    if (wanted) targets.push_back(&r);
  }
  if (!modules.empty() && targets.size() != modules.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "some requested modules are not in the corpus");
  }
  for (const LabeledModule* r : targets) {
    emit(Localize(r->id(), LineVectors(set, r->id(), r->module.lines.size()),
                  ModuleVector(set, r->id()), lm, &r->line_labels),
         r->module.lines);
  }
}

void CmdStats(Context& ctx, const std::string& manifest) {
  fs::path path = manifest;
  if (path.empty()) {
    path = fs::exists(ctx.paths.corpus) ? ctx.paths.corpus
                                        : ctx.config.paths.corpus;
  }
  Require(path, "fixtures");
  *ctx.out << CorpusStatsJson(ComputeCorpusStats(LoadManifest(path))) << "\n";
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out) {
  CLI::App app{"Hardware Trojan detection and line localization for RTL",
               "trojanloc"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags g;
  app.add_option("--config", g.config_path, "Run configuration (JSON)");
  app.add_option("--seed", g.seed, "Global seed, overrides the config");
  app.add_option("--workers", g.workers, "Worker threads")
      ->check(CLI::PositiveNumber);
  app.add_option("--backend", g.backend, "Embedding backend")
      ->check(CLI::IsMember({"reference", "remote"}));
  app.add_option("--work-dir", g.work_dir, "Artifact directory");
  app.add_flag("--no-cache", g.no_cache, "Recompute embeddings");
  app.add_flag("-q,--quiet", g.quiet, "Only log warnings");
  app.add_flag("-v,--verbose", g.verbose, "Debug logging");

  int bases = 0;
  std::string fixtures_out;
  auto* fixtures = app.add_subcommand("fixtures", "Generate a fixture corpus");
  fixtures->add_option("--bases", bases, "Clean base designs")
      ->check(CLI::PositiveNumber);
  fixtures->add_option("--out", fixtures_out, "Output manifest");

  std::string preprocess_in;
  auto* preprocess = app.add_subcommand(
      "preprocess", "Strip comments, sanitize names and split the corpus");
  preprocess->add_option("--in", preprocess_in, "Input manifest");

  auto* embed = app.add_subcommand("embed", "Extract embeddings into caches");
  auto* train_ae = app.add_subcommand("train-ae", "Train the autoencoders");
  auto* train = app.add_subcommand("train", "Train the classifiers");
  auto* evaluate =
      app.add_subcommand("evaluate", "Score the test split, write reports");

  std::vector<std::string> localize_modules;
  std::string localize_file;
  bool localize_text = false;
  auto* localize = app.add_subcommand("localize", "Rank suspicious lines");
  localize->add_option("--module", localize_modules,
                       "Module ids (default: every test module)");
  localize->add_option("--file", localize_file, "Score a Verilog file");
  localize->add_flag("--text", localize_text, "Also write a text rendering");

  std::string stats_manifest;
  auto* stats = app.add_subcommand("stats", "Print corpus statistics");
  stats->add_option("manifest", stats_manifest, "Manifest path");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream err;
    const int code = app.exit(e, out, err);
    if (!err.str().empty()) LogWarning(err.str());
    return code == 0 ? 0 : 1;
  }

  const LogLevel previous = GetLogLevel();
  if (g.quiet) SetLogLevel(LogLevel::kWarning);
  if (g.verbose) SetLogLevel(LogLevel::kDebug);
  int code = 0;
  try {
    Context ctx;
    ctx.config =
        g.config_path.empty() ? RunConfig{} : LoadConfig(g.config_path);
    if (g.seed) ctx.config.seed = *g.seed;
    if (g.workers) ctx.config.workers = *g.workers;
    if (!g.backend.empty()) {
      ctx.config.backend.kind = g.backend == "remote" ? BackendKind::kRemote
                                                      : BackendKind::kReference;
    }
    if (!g.work_dir.empty()) ctx.config.paths.work_dir = g.work_dir;
    ApplyEnvironment(ctx.config);
    ctx.config.Validate();
    ctx.paths = ArtifactPaths(ctx.config.paths.work_dir);
    ctx.no_cache = g.no_cache;
    ctx.out = &out;

    if (fixtures->parsed()) {
      CmdFixtures(ctx, bases, fixtures_out);
    } else if (preprocess->parsed()) {
      CmdPreprocess(ctx, preprocess_in);
    } else if (embed->parsed()) {
      CmdEmbed(ctx);
    } else if (train_ae->parsed()) {
      CmdTrainAe(ctx);
    } else if (train->parsed()) {
      CmdTrain(ctx);
    } else if (evaluate->parsed()) {
      CmdEvaluate(ctx);
    } else if (localize->parsed()) {
      CmdLocalize(ctx, localize_modules, localize_file, localize_text);
    } else if (stats->parsed()) {
      CmdStats(ctx, stats_manifest);
    }
  } catch (const Error& e) {
    LogError(e.what());
    code = ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    LogError(e.what());
    code = 2;
  }
  SetLogLevel(previous);
  return code;
}

}  // namespace trojanloc
