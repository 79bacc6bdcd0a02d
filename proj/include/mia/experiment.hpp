// Copyright 2026 The mia Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// End-to-end experiment: data, partition, target and reference training,
// shadow calibration, scoring and evaluation.
//
// Every repeat r runs with base seed `config.seed + r`; each stage draws from
// its own child seed (see StageSeeds), so stages can be re-run in isolation.

#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mia/attacks.hpp"
#include "mia/config.hpp"
#include "mia/core.hpp"
#include "mia/error.hpp"
#include "mia/eval.hpp"
#include "mia/io.hpp"
#include "mia/models.hpp"
#include "mia/shadow.hpp"

namespace mia {

inline constexpr const char* kVersion = "0.1.0";

/// Error raised by a pipeline stage; keeps the category of the cause.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause)
      : Error(cause.kind(), "stage '" + stage + "': " + cause.what()),
        stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

template <class Fn>
auto RunStage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e);
  }
}

struct StageSeeds {
  std::uint64_t base = 0;
  RngSeed data;
  RngSeed partition;
  RngSeed shadows;

  static StageSeeds For(std::uint64_t base) {
    const RngSeed root{base};
    return {base, DeriveSeed(root, 0), DeriveSeed(root, 1), DeriveSeed(root, 2)};
  }
};

/// Evaluated samples (target train + held-out) and the reserved calibration
/// samples, as indices into the full dataset. `split` is over `evaluated`.
struct Partition {
  std::vector<std::size_t> evaluated;
  std::vector<std::size_t> calibration;
  SplitSpec split;
};

inline Dataset MakeDataset(const ExperimentConfig& config, RngSeed seed) {
  const std::size_t total = config.data.n + config.num_calibration();
  switch (config.data.source) {
    case DataSource::kGaussian:
      return GenGaussianDataset(total, config.data.d, config.data.MeanVector(), seed);
    case DataSource::kTwoClass:
      return GenTwoClassFeatures(total, config.data.d, config.data.separation, seed);
    case DataSource::kFile: {
      Dataset data = LoadDataset(config.data.path);
      if (data.size() < total) {
        throw DataError(config.data.path + " has " + std::to_string(data.size()) +
                        " rows, need " + std::to_string(total));
      }
      return data;
    }
  }
  throw ConfigError("unknown data source");
}

/// A random permutation puts the first `calibration` samples aside; the next
/// n are the evaluated samples, split into members and non-members.
inline Partition MakePartition(const ExperimentConfig& config, std::size_t dataset_size,
                               RngSeed seed) {
  const std::size_t n = config.data.n;
  const std::size_t n_cal = config.num_calibration();
  if (dataset_size < n + n_cal) throw DataError("dataset too small for the partition");
  Rng rng(seed);
  const auto perm = RandomPermutation(dataset_size, rng);
  Partition part;
  part.calibration.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_cal));
  part.evaluated.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_cal),
                        perm.begin() + static_cast<std::ptrdiff_t>(n_cal + n));
  part.split = DrawSplit(n, config.lambda, DeriveSeed(seed, 1), config.split_mode);
  return part;
}

inline nlohmann::json ToJson(const Partition& part) {
  return nlohmann::json{{"evaluated", part.evaluated},
                        {"calibration", part.calibration},
                        {"lambda", part.split.lambda},
                        {"mask", part.split.mask}};
}

inline Partition PartitionFromJson(const nlohmann::json& j) {
  try {
    Partition part;
    part.evaluated = j.at("evaluated").get<std::vector<std::size_t>>();
    part.calibration = j.at("calibration").get<std::vector<std::size_t>>();
    part.split.lambda = j.at("lambda").get<double>();
    part.split.mask = j.at("mask").get<std::vector<std::uint8_t>>();
    if (part.split.mask.size() != part.evaluated.size()) {
      throw DataError("partition: mask length differs from evaluated count");
    }
    return part;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed partition: ") + e.what());
  }
}

/// Everything the attacks need for one repeat.
struct AttackContext {
  Dataset data;
  Partition partition;
  Dataset evaluated;
  ModelParams target;
  std::optional<ModelParams> reference;  // θ₀*, fit on the calibration samples
  std::optional<Matrix> reference_hessian;
  std::optional<ShadowEnsemble> shadows;
  std::optional<TauEstimate> tau;
  std::optional<Vector> mu;  // true data mean, Gaussian source only
};

inline ModelParams TrainReference(const ExperimentConfig& config, const Dataset& data,
                                  std::span<const std::size_t> calibration) {
  if (config.model == ModelKind::kGaussianMean) {
    SplitSpec all{std::vector<std::uint8_t>(data.size(), 0), config.lambda};
    for (std::size_t i : calibration) all.mask[i] = 1;
    return TrainGaussianMean(data, all, config.temperature);
  }
  return TrainLogreg(data, calibration, config.trainer().logreg, config.temperature);
}

inline AttackContext PrepareContext(const ExperimentConfig& config, const StageSeeds& seeds) {
  AttackContext ctx;
  ctx.data = RunStage("data", [&] { return MakeDataset(config, seeds.data); });
  ctx.partition =
      RunStage("partition", [&] { return MakePartition(config, ctx.data.size(), seeds.partition); });
  ctx.evaluated = ctx.data.Subset(ctx.partition.evaluated);
  if (config.data.source == DataSource::kGaussian) ctx.mu = config.data.MeanVector();

  ctx.target = RunStage("train", [&] {
    return Train(ctx.evaluated, ctx.partition.split, config.trainer());
  });
  if (config.wants(AttackKind::kMatt) || config.wants(AttackKind::kMattFull)) {
    RunStage("reference", [&] {
      ctx.reference = TrainReference(config, ctx.data, ctx.partition.calibration);
      if (config.wants(AttackKind::kMattFull)) {
        ctx.reference_hessian = MemberHessian(*ctx.reference, ctx.data, ctx.partition.calibration);
      }
      return 0;
    });
  }
  if (config.wants(AttackKind::kMast)) {
    RunStage("shadow", [&] {
      ctx.shadows = TrainShadows(ctx.evaluated, config.shadows, config.shadow_member_fraction,
                                 seeds.shadows, config.trainer(), config.threads);
      return 0;
    });
    RunStage("calibration", [&] {
      ctx.tau = EstimateTauPerSample(*ctx.shadows);
      return 0;
    });
  }
  return ctx;
}

inline std::vector<ScoreRecord> ScoreAttack(AttackKind kind, const AttackContext& ctx) {
  const Dataset& eval = ctx.evaluated;
  const SplitSpec& split = ctx.partition.split;
  std::optional<HessianInverse> hinv;
  if (kind == AttackKind::kMattFull) {
    if (!ctx.reference_hessian) throw CalibrationError("matt_full: no reference Hessian");
    hinv.emplace(*ctx.reference_hessian);
  }
  const std::size_t n_prime = split.num_members();
  std::vector<ScoreRecord> records(eval.size());
  for (std::size_t i = 0; i < eval.size(); ++i) {
    const Sample& z = eval[i];
    double s = 0.0;
    switch (kind) {
      case AttackKind::kZeroOne: s = ZeroOneScore(ctx.target, z); break;
      case AttackKind::kMalt: s = MaltScore(ctx.target, z); break;
      case AttackKind::kMast:
        if (!ctx.tau) throw CalibrationError("mast: no shadow calibration");
        s = MastScore(ctx.target, z, *ctx.tau, i);
        break;
      case AttackKind::kMastClosedForm:
        if (!ctx.mu) throw CalibrationError("mast_closed_form: data mean unknown");
        s = MastScore(ctx.target, z, GaussianTauClosedForm(z, *ctx.mu, n_prime));
        break;
      case AttackKind::kOptimal:
        if (!ctx.mu) throw CalibrationError("optimal: data mean unknown");
        s = GaussianOptimalScore(ctx.target, z, *ctx.mu, n_prime);
        break;
      case AttackKind::kMatt:
        if (!ctx.reference) throw CalibrationError("matt: no reference model");
        s = MattScore(ctx.target, *ctx.reference, z);
        break;
      case AttackKind::kMattFull:
        s = MattFullScore(ctx.target, *ctx.reference, z, *hinv);
        break;
    }
    records[i] = ScoreRecord{i, s, split.is_member(i)};
  }
  return records;
}

struct AttackOutcome {
  AttackKind attack;
  std::vector<ScoreRecord> records;
  AttackReport report;
};

struct RepeatResult {
  StageSeeds seeds;
  std::vector<AttackOutcome> outcomes;
  std::vector<std::size_t> tau_fallback;  // MAST samples using the pooled τ
};

inline RepeatResult RunRepeat(const ExperimentConfig& config, std::size_t repeat) {
  RepeatResult result;
  result.seeds = StageSeeds::For(config.seed + repeat);
  const AttackContext ctx = PrepareContext(config, result.seeds);
  if (ctx.tau) result.tau_fallback = ctx.tau->fallback;
  for (AttackKind kind : config.attacks) {
    AttackOutcome outcome{kind, {}, {}};
    outcome.records = RunStage(std::string("attack:") + AttackName(kind),
                               [&] { return ScoreAttack(kind, ctx); });
    outcome.report = RunStage("eval", [&] {
      return Evaluate(outcome.records, AttackName(kind), result.seeds.base, config.cv_folds);
    });
    outcome.report.calibrated_on_evaluated = kind == AttackKind::kMast;
    result.outcomes.push_back(std::move(outcome));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Artifacts

inline std::string ScoreFileName(AttackKind kind, std::uint64_t seed) {
  return std::string("scores/") + AttackName(kind) + "_seed" + std::to_string(seed) + ".csv";
}

inline std::string ReportFileName(AttackKind kind, std::uint64_t seed) {
  return std::string("reports/") + AttackName(kind) + "_seed" + std::to_string(seed) + ".json";
}

inline std::string SummaryHeader() {
  return "attack,seed,n,member_fraction,threshold,accuracy,cv_accuracy,map_train,map_test\n";
}

inline std::string SummaryRow(const AttackReport& r) {
  std::ostringstream out;
  out << r.attack << ',' << r.seed << ',' << r.n << ',' << FormatDouble(r.member_fraction) << ','
      << FormatDouble(r.threshold) << ',' << FormatDouble(r.accuracy) << ','
      << FormatDouble(r.cv_accuracy) << ',' << FormatDouble(r.map_train) << ','
      << FormatDouble(r.map_test) << '\n';
  return out.str();
}

inline std::string AggregateHeader() {
  return "attack,repeats,accuracy_mean,accuracy_se,cv_accuracy_mean,cv_accuracy_se,"
         "map_train_mean,map_train_se,map_test_mean,map_test_se\n";
}

inline std::string AggregateRow(const AggregateReport& a) {
  std::ostringstream out;
  out << a.attack << ',' << a.repeats;
  for (const MeanSe& m : {a.accuracy, a.cv_accuracy, a.map_train, a.map_test}) {
    out << ',' << FormatDouble(m.mean) << ',' << FormatDouble(m.se);
  }
  out << '\n';
  return out.str();
}

/// One aggregate per attack, in config order.
inline std::vector<AggregateReport> AggregateRepeats(const ExperimentConfig& config,
                                                     const std::vector<RepeatResult>& repeats) {
  std::vector<AggregateReport> out;
  for (std::size_t a = 0; a < config.attacks.size(); ++a) {
    std::vector<AttackReport> reports;
    for (const auto& rep : repeats) reports.push_back(rep.outcomes[a].report);
    out.push_back(Aggregate(reports));
  }
  return out;
}

inline std::string Timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Refuses to overwrite a previous run unless `force` is set.
inline void PrepareOutputDir(const std::filesystem::path& out, bool force) {
  namespace fs = std::filesystem;
  if (fs::exists(out) && !fs::is_directory(out)) {
    throw IoError(out.string() + " exists and is not a directory");
  }
  if (fs::exists(out) && !fs::is_empty(out) && !force) {
    throw IoError(out.string() + " is not empty; pass --force to overwrite");
  }
  fs::create_directories(out);
}

struct ExperimentResult {
  std::vector<RepeatResult> repeats;
  nlohmann::json manifest;
};

/// Runs every repeat and writes scores, reports, summary.csv, aggregate.csv
/// and manifest.json under `out`. On failure the manifest is written with
/// status "incomplete" and the failing stage before the error propagates.
inline ExperimentResult RunExperiment(const ExperimentConfig& config,
                                      const std::filesystem::path& out, bool force) {
  config.Validate();
  PrepareOutputDir(out, force);
  ExperimentResult result;
  nlohmann::json& manifest = result.manifest;
  manifest = {{"version", kVersion},
              {"config", ToJson(config)},
              {"started", Timestamp()},
              {"status", "running"},
              {"repeats", nlohmann::json::array()}};
  std::string summary = SummaryHeader();
  try {
    for (std::size_t r = 0; r < config.repeats; ++r) {
      RepeatResult rep = RunRepeat(config, r);
      nlohmann::json entry = {{"seed", rep.seeds.base},
                              {"data_seed", rep.seeds.data.value},
                              {"partition_seed", rep.seeds.partition.value},
                              {"shadow_seed", rep.seeds.shadows.value},
                              {"artifacts", nlohmann::json::array()}};
      if (config.wants(AttackKind::kMast)) entry["tau_fallback"] = rep.tau_fallback;
      for (const auto& o : rep.outcomes) {
        const auto score_file = ScoreFileName(o.attack, rep.seeds.base);
        const auto report_file = ReportFileName(o.attack, rep.seeds.base);
        std::ostringstream scores;
        WriteScoresCsv(scores, AttackName(o.attack), o.records);
        WriteFile(out / score_file, scores.str());
        WriteJsonFile(out / report_file, ToJson(o.report));
        summary += SummaryRow(o.report);
        entry["artifacts"].push_back({{"attack", AttackName(o.attack)},
                                      {"scores", score_file},
                                      {"report", report_file}});
      }
      manifest["repeats"].push_back(std::move(entry));
      result.repeats.push_back(std::move(rep));
    }
  } catch (const Error& e) {
    manifest["status"] = "incomplete";
    manifest["error"] = e.what();
    if (const auto* se = dynamic_cast<const StageError*>(&e)) manifest["failed_stage"] = se->stage();
    manifest["finished"] = Timestamp();
    WriteFile(out / "summary.csv", summary);
    WriteJsonFile(out / "manifest.json", manifest);
    throw;
  }
  std::string aggregate = AggregateHeader();
  for (const auto& a : AggregateRepeats(config, result.repeats)) aggregate += AggregateRow(a);
  manifest["status"] = "complete";
  manifest["finished"] = Timestamp();
  WriteFile(out / "summary.csv", summary);
  WriteFile(out / "aggregate.csv", aggregate);
  WriteJsonFile(out / "manifest.json", manifest);
  return result;
}

}  // namespace mia
