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

// mia: membership-inference experiments from the command line.
//
// Stage commands share one working directory (--out):
//   gen-data  dataset.csv
//   train     partition.json, target_model.json[, reference_model.json]
//   shadow    shadows/shadow_<k>.json, shadows/manifest.json, tau.json
//   attack    scores/<attack>_seed<s>.csv
//   eval      reports/<attack>_seed<s>.json, summary.csv
// `run` performs all of them for every repeat; `dp-bound` prints the
// membership-posterior bounds.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mia/mia.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool force = false;
  std::optional<int> threads;
};

void AddCommon(CLI::App* cmd, CommonOptions& opts, bool needs_config = true) {
  auto* c = cmd->add_option("--config", opts.config_path, "Experiment config (JSON)");
  if (needs_config) c->required();
  cmd->add_option("--seed", opts.seed, "Override the config seed");
  cmd->add_option("--out", opts.out, "Output directory (overrides config 'output')");
  cmd->add_flag("--force", opts.force, "Overwrite existing outputs");
  cmd->add_option("--threads", opts.threads, "Worker threads for shadow training");
}

mia::ExperimentConfig LoadConfig(const CommonOptions& opts) {
  mia::ExperimentConfig config = mia::ConfigFromJson(mia::ReadJsonFile(opts.config_path));
  if (opts.seed) config.seed = *opts.seed;
  if (!opts.out.empty()) config.output = opts.out;
  if (opts.threads) config.threads = *opts.threads;
  if (config.data.source == mia::DataSource::kFile) {
    // Dataset paths are relative to the config file.
    fs::path p(config.data.path);
    if (p.is_relative()) config.data.path = (fs::path(opts.config_path).parent_path() / p).string();
  }
  return config;
}

void CheckWritable(const fs::path& path, bool force) {
  if (fs::exists(path) && !force) {
    throw mia::IoError(path.string() + " exists; pass --force to overwrite");
  }
}

mia::Dataset DatasetFor(const mia::ExperimentConfig& config, const fs::path& dir,
                        const mia::StageSeeds& seeds) {
  if (fs::exists(dir / "dataset.csv")) return mia::LoadDataset(dir / "dataset.csv");
  return mia::MakeDataset(config, seeds.data);
}

void SaveModel(const fs::path& path, const mia::ModelParams& params) {
  mia::WriteJsonFile(path, mia::ToJson(params));
}

mia::ModelParams LoadModel(const fs::path& path) {
  return mia::ModelParamsFromJson(mia::ReadJsonFile(path));
}

// --- gen-data --------------------------------------------------------------

void CmdGenData(const CommonOptions& opts) {
  const auto config = LoadConfig(opts);
  const fs::path out(config.output);
  CheckWritable(out / "dataset.csv", opts.force);
  const auto seeds = mia::StageSeeds::For(config.seed);
  const auto data = mia::RunStage("data", [&] { return mia::MakeDataset(config, seeds.data); });
  mia::SaveDataset(out / "dataset.csv", data);
  std::cout << "wrote " << (out / "dataset.csv").string() << " (" << data.size() << " rows, d = "
            << data.dim() << ")\n";
}

// --- train -----------------------------------------------------------------

void CmdTrain(const CommonOptions& opts) {
  const auto config = LoadConfig(opts);
  const fs::path out(config.output);
  CheckWritable(out / "target_model.json", opts.force);
  const auto seeds = mia::StageSeeds::For(config.seed);
  const auto data = mia::RunStage("data", [&] { return DatasetFor(config, out, seeds); });
  const auto part = mia::RunStage(
      "partition", [&] { return mia::MakePartition(config, data.size(), seeds.partition); });
  const auto evaluated = data.Subset(part.evaluated);
  const auto target =
      mia::RunStage("train", [&] { return mia::Train(evaluated, part.split, config.trainer()); });
  mia::WriteJsonFile(out / "partition.json", mia::ToJson(part));
  SaveModel(out / "target_model.json", target);
  std::cout << "target: " << part.split.num_members() << " members of " << part.evaluated.size()
            << " evaluated samples\n";
  if (config.wants(mia::AttackKind::kMatt) || config.wants(mia::AttackKind::kMattFull)) {
    const auto reference = mia::RunStage(
        "reference", [&] { return mia::TrainReference(config, data, part.calibration); });
    SaveModel(out / "reference_model.json", reference);
    std::cout << "reference: " << part.calibration.size() << " calibration samples\n";
  }
}

// --- shadow ----------------------------------------------------------------

void CmdShadow(const CommonOptions& opts) {
  auto config = LoadConfig(opts);
  const fs::path out(config.output);
  if (config.shadows < 1) throw mia::ConfigError("shadow: config needs shadows >= 1");
  CheckWritable(out / "shadows" / "manifest.json", opts.force);
  const auto seeds = mia::StageSeeds::For(config.seed);
  const auto data = mia::RunStage("data", [&] { return DatasetFor(config, out, seeds); });
  const auto part = mia::PartitionFromJson(mia::ReadJsonFile(out / "partition.json"));
  const auto pool = data.Subset(part.evaluated);
  const auto ensemble = mia::RunStage("shadow", [&] {
    return mia::TrainShadows(pool, config.shadows, config.shadow_member_fraction, seeds.shadows,
                             config.trainer(), config.threads);
  });
  nlohmann::json manifest = {{"K", ensemble.size()},
                             {"member_fraction", config.shadow_member_fraction},
                             {"master_seed", seeds.shadows.value},
                             {"shadows", nlohmann::json::array()}};
  for (std::size_t k = 0; k < ensemble.size(); ++k) {
    const std::string file = "shadow_" + std::to_string(k) + ".json";
    SaveModel(out / "shadows" / file, ensemble.models[k]);
    manifest["shadows"].push_back({{"model", file},
                                   {"seed", ensemble.seeds[k].value},
                                   {"mask", ensemble.masks[k].mask}});
  }
  mia::WriteJsonFile(out / "shadows" / "manifest.json", manifest);

  const auto tau = mia::RunStage("calibration", [&] {
    nlohmann::json doc;
    const auto global = mia::EstimateTauGlobal(ensemble);
    const auto per_sample = mia::EstimateTauPerSample(ensemble);
    doc["global"] = mia::JsonDouble(*global.global);
    doc["global_degenerate"] = global.degenerate;
    doc["per_sample"] = per_sample.per_sample;
    doc["fallback"] = per_sample.fallback;
    return doc;
  });
  mia::WriteJsonFile(out / "tau.json", tau);
  std::cout << "trained " << ensemble.size() << " shadows; global tau = "
            << tau["global"].dump() << "; " << tau["fallback"].size()
            << " samples use the global tau\n";
}

// --- attack ----------------------------------------------------------------

void CmdAttack(const CommonOptions& opts) {
  const auto config = LoadConfig(opts);
  const fs::path out(config.output);
  const auto seeds = mia::StageSeeds::For(config.seed);
  mia::AttackContext ctx;
  ctx.data = mia::RunStage("data", [&] { return DatasetFor(config, out, seeds); });
  ctx.partition = mia::PartitionFromJson(mia::ReadJsonFile(out / "partition.json"));
  ctx.evaluated = ctx.data.Subset(ctx.partition.evaluated);
  ctx.target = LoadModel(out / "target_model.json");
  if (config.data.source == mia::DataSource::kGaussian) ctx.mu = config.data.MeanVector();
  if (fs::exists(out / "reference_model.json")) {
    ctx.reference = LoadModel(out / "reference_model.json");
    ctx.reference_hessian =
        mia::MemberHessian(*ctx.reference, ctx.data, ctx.partition.calibration);
  }
  if (fs::exists(out / "tau.json")) {
    ctx.tau = mia::TauEstimate::PerSample(
        mia::ReadJsonFile(out / "tau.json").at("per_sample").get<std::vector<double>>());
  }
  for (mia::AttackKind kind : config.attacks) {
    const auto file = out / mia::ScoreFileName(kind, config.seed);
    CheckWritable(file, opts.force);
    const auto records = mia::RunStage(std::string("attack:") + mia::AttackName(kind),
                                       [&] { return mia::ScoreAttack(kind, ctx); });
    std::ostringstream table;
    mia::WriteScoresCsv(table, mia::AttackName(kind), records);
    mia::WriteFile(file, table.str());
    std::cout << "wrote " << file.string() << "\n";
  }
}

// --- eval ------------------------------------------------------------------

struct EvalOptions {
  std::string out = "out";
  std::vector<std::string> scores;
  std::uint64_t seed = 0;
  int cv_folds = 2;
};

void CmdEval(const EvalOptions& opts) {
  const fs::path out(opts.out);
  std::vector<fs::path> files(opts.scores.begin(), opts.scores.end());
  if (files.empty() && fs::is_directory(out / "scores")) {
    for (const auto& entry : fs::directory_iterator(out / "scores")) {
      if (entry.path().extension() == ".csv") files.push_back(entry.path());
    }
  }
  if (files.empty()) throw mia::DataError("eval: no score files found");
  std::sort(files.begin(), files.end());
  std::string summary = mia::SummaryHeader();
  for (const auto& file : files) {
    std::ifstream in(file);
    if (!in) throw mia::IoError("cannot open " + file.string());
    const auto table = mia::ReadScoresCsv(in);
    auto report = mia::RunStage(
        "eval", [&] { return mia::Evaluate(table.records, table.attack, opts.seed, opts.cv_folds); });
    report.calibrated_on_evaluated = table.attack == mia::AttackName(mia::AttackKind::kMast);
    mia::WriteJsonFile(out / "reports" / (file.stem().string() + ".json"), mia::ToJson(report));
    summary += mia::SummaryRow(report);
    std::printf("%-18s acc %.4f  cv %.4f  mAP_train %.4f  mAP_test %.4f\n", report.attack.c_str(),
                report.accuracy, report.cv_accuracy, report.map_train, report.map_test);
  }
  mia::WriteFile(out / "summary.csv", summary);
}

// --- run -------------------------------------------------------------------

void CmdRun(const CommonOptions& opts) {
  const auto config = LoadConfig(opts);
  const auto result = mia::RunExperiment(config, config.output, opts.force);
  for (const auto& a : mia::AggregateRepeats(config, result.repeats)) {
    std::printf("%-18s acc %.4f ± %.4f  mAP_train %.4f ± %.4f  mAP_test %.4f ± %.4f  (%zu repeats)\n",
                a.attack.c_str(), a.accuracy.mean, a.accuracy.se, a.map_train.mean,
                a.map_train.se, a.map_test.mean, a.map_test.se, a.repeats);
  }
}

// --- dp-bound --------------------------------------------------------------

struct BoundOptions {
  double epsilon = 0.0;
  std::optional<double> delta;
  std::optional<double> temperature;
  double lambda = 0.5;
};

void CmdDpBound(const BoundOptions& opts) {
  std::printf("dp_bound %.10g\n", mia::DpMembershipBound(opts.epsilon, opts.lambda));
  if (opts.delta || opts.temperature) {
    std::printf("membership_privacy_bound %.10g\n",
                mia::MembershipPrivacyBound(opts.epsilon, opts.delta.value_or(0.0),
                                            opts.temperature.value_or(1.0), opts.lambda));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Membership inference attacks: experiments, calibration and bounds"};
  app.set_version_flag("--version", mia::kVersion);
  app.require_subcommand(1);

  CommonOptions gen_opts, train_opts, shadow_opts, attack_opts, run_opts;
  auto* gen = app.add_subcommand("gen-data", "Generate the dataset described by a config");
  AddCommon(gen, gen_opts);
  auto* train = app.add_subcommand("train", "Partition the data and train target/reference models");
  AddCommon(train, train_opts);
  auto* shadow = app.add_subcommand("shadow", "Train shadow models and estimate tau");
  AddCommon(shadow, shadow_opts);
  auto* attack = app.add_subcommand("attack", "Score evaluated samples with each attack");
  AddCommon(attack, attack_opts);

  EvalOptions eval_opts;
  auto* eval = app.add_subcommand("eval", "Compute metrics for score tables");
  eval->add_option("--out", eval_opts.out, "Working directory");
  eval->add_option("--scores", eval_opts.scores, "Score tables (default: <out>/scores/*.csv)");
  eval->add_option("--seed", eval_opts.seed, "Seed for the cross-validated accuracy");
  eval->add_option("--cv-folds", eval_opts.cv_folds, "Folds for cross-validated accuracy");

  auto* run = app.add_subcommand("run", "Run the whole experiment");
  AddCommon(run, run_opts);

  BoundOptions bound_opts;
  auto* bound = app.add_subcommand("dp-bound", "Bounds on the membership posterior");
  bound->add_option("--epsilon", bound_opts.epsilon, "Privacy parameter epsilon")->required();
  bound->add_option("--delta", bound_opts.delta, "Membership-privacy delta");
  bound->add_option("--temperature,-T", bound_opts.temperature, "Posterior temperature");
  bound->add_option("--lambda", bound_opts.lambda, "Prior membership probability");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(mia::ErrorKind::kConfig);
  }

  try {
    if (*gen) CmdGenData(gen_opts);
    if (*train) CmdTrain(train_opts);
    if (*shadow) CmdShadow(shadow_opts);
    if (*attack) CmdAttack(attack_opts);
    if (*eval) CmdEval(eval_opts);
    if (*run) CmdRun(run_opts);
    if (*bound) CmdDpBound(bound_opts);
  } catch (const mia::Error& e) {
    std::cerr << "error (" << mia::ErrorKindName(e.kind()) << "): " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
