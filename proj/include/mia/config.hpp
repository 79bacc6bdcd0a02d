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

// Experiment configuration document.
//
// {
//   "model": "gaussian_mean" | "logistic_regression",
//   "data": {"source": "gaussian", "n": 100, "d": 2000, "mu": 0.0}
//         | {"source": "two_class", "n": 400, "d": 64, "separation": 3.5}
//         | {"source": "file", "path": "data.csv", "n": 400},
//   "lambda": 0.5, "temperature": 1.0, "l2": 1.0, "tol": 1e-8,
//   "split_mode": "exact" | "bernoulli",
//   "calibration_fraction": 0.5,
//   "shadows": 30, "shadow_member_fraction": 0.5,
//   "seed": 0, "repeats": 1, "cv_folds": 2, "threads": 1,
//   "attacks": ["zero_one", "malt", "matt"],
//   "output": "out"
// }
//
// `data.n` counts the evaluated samples (target train + held-out). A further
// round(calibration_fraction * n) samples are reserved to fit the MATT
// reference model.

#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mia/attacks.hpp"
#include "mia/core.hpp"
#include "mia/error.hpp"
#include "mia/models.hpp"

namespace mia {

enum class DataSource { kGaussian, kTwoClass, kFile };

struct DataSpec {
  DataSource source = DataSource::kGaussian;
  std::size_t n = 100;
  Eigen::Index d = 2;
  std::vector<double> mu;  // empty: zero mean; one value: broadcast
  double separation = 0.0;
  std::string path;

  Vector MeanVector() const {
    if (mu.empty()) return Vector::Zero(d);
    if (mu.size() == 1) return Vector::Constant(d, mu[0]);
    if (static_cast<Eigen::Index>(mu.size()) != d) {
      throw ConfigError("data.mu has " + std::to_string(mu.size()) + " entries, d = " +
                        std::to_string(d));
    }
    return Eigen::Map<const Vector>(mu.data(), d);
  }
};

struct ExperimentConfig {
  ModelKind model = ModelKind::kGaussianMean;
  DataSpec data;
  double lambda = 0.5;
  double temperature = 1.0;
  double l2 = 1.0;
  double tol = 1e-8;
  SplitMode split_mode = SplitMode::kExactCount;
  double calibration_fraction = 0.0;
  std::size_t shadows = 0;
  double shadow_member_fraction = 0.5;
  std::uint64_t seed = 0;
  std::size_t repeats = 1;
  int cv_folds = 2;
  int threads = 1;
  std::vector<AttackKind> attacks;
  std::string output = "out";

  std::size_t num_calibration() const {
    return static_cast<std::size_t>(
        std::llround(calibration_fraction * static_cast<double>(data.n)));
  }

  bool wants(AttackKind kind) const {
    return std::find(attacks.begin(), attacks.end(), kind) != attacks.end();
  }

  TrainerConfig trainer() const {
    return TrainerConfig{model, TrainOptions{l2, tol, 100}, temperature};
  }

  /// Structural checks that do not need the data.
  void Validate() const {
    if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
    if (!(lambda > 0.0 && lambda < 1.0)) throw ConfigError("lambda must lie in (0, 1)");
    if (data.n < 2) throw ConfigError("data.n must be >= 2");
    if (data.source != DataSource::kFile && data.d < 1) throw ConfigError("data.d must be >= 1");
    if (!(calibration_fraction >= 0.0)) throw ConfigError("calibration_fraction must be >= 0");
    if (!(shadow_member_fraction > 0.0 && shadow_member_fraction < 1.0)) {
      throw ConfigError("shadow_member_fraction must lie in (0, 1)");
    }
    if (repeats < 1) throw ConfigError("repeats must be >= 1");
    if (cv_folds < 2) throw ConfigError("cv_folds must be >= 2");
    if (attacks.empty()) throw ConfigError("attack list is empty");
    if (model == ModelKind::kLogisticRegression && !(l2 > 0.0)) {
      throw ConfigError("logistic regression needs l2 > 0");
    }
    if (wants(AttackKind::kMast) && shadows < 1) {
      throw ConfigError("attack 'mast' needs a shadow ensemble: set shadows >= 1");
    }
    if ((wants(AttackKind::kMatt) || wants(AttackKind::kMattFull)) &&
        num_calibration() < 2) {
      throw ConfigError("attack 'matt' needs a reserved calibration split: "
                        "set calibration_fraction > 0");
    }
    const bool gaussian = model == ModelKind::kGaussianMean;
    for (AttackKind a : attacks) {
      if (gaussian && a == AttackKind::kZeroOne) {
        throw ConfigError("attack 'zero_one' needs a classifier model");
      }
      if ((a == AttackKind::kMastClosedForm || a == AttackKind::kOptimal) &&
          !(gaussian && data.source == DataSource::kGaussian)) {
        throw ConfigError(std::string("attack '") + AttackName(a) +
                          "' needs the gaussian_mean model on gaussian data");
      }
      if (a == AttackKind::kOptimal && temperature != 1.0) {
        throw ConfigError("attack 'optimal' is only defined at temperature 1");
      }
    }
    if (data.source == DataSource::kTwoClass && (data.n + num_calibration()) % 2 != 0) {
      throw ConfigError("two_class data needs n + calibration count to be even");
    }
    if (data.source == DataSource::kFile && data.path.empty()) {
      throw ConfigError("file data source needs data.path");
    }
  }
};

inline nlohmann::json ToJson(const ExperimentConfig& c) {
  nlohmann::json data;
  switch (c.data.source) {
    case DataSource::kGaussian:
      data = {{"source", "gaussian"}, {"n", c.data.n}, {"d", c.data.d}, {"mu", c.data.mu}};
      break;
    case DataSource::kTwoClass:
      data = {{"source", "two_class"}, {"n", c.data.n}, {"d", c.data.d},
              {"separation", c.data.separation}};
      break;
    case DataSource::kFile:
      data = {{"source", "file"}, {"n", c.data.n}, {"path", c.data.path}};
      break;
  }
  std::vector<std::string> attacks;
  for (AttackKind a : c.attacks) attacks.emplace_back(AttackName(a));
  return nlohmann::json{
      {"model", ModelKindName(c.model)},
      {"data", data},
      {"lambda", c.lambda},
      {"temperature", c.temperature},
      {"l2", c.l2},
      {"tol", c.tol},
      {"split_mode", c.split_mode == SplitMode::kExactCount ? "exact" : "bernoulli"},
      {"calibration_fraction", c.calibration_fraction},
      {"shadows", c.shadows},
      {"shadow_member_fraction", c.shadow_member_fraction},
      {"seed", c.seed},
      {"repeats", c.repeats},
      {"cv_folds", c.cv_folds},
      {"threads", c.threads},
      {"attacks", attacks},
      {"output", c.output},
  };
}

inline ExperimentConfig ConfigFromJson(const nlohmann::json& doc) {
  // A run manifest embeds its config; accept either document.
  const nlohmann::json& j = doc.contains("config") ? doc.at("config") : doc;
  ExperimentConfig c;
  try {
    c.model = ParseModelKind(j.value("model", std::string("gaussian_mean")));
    const auto& data = j.at("data");
    const std::string source = data.at("source").get<std::string>();
    if (source == "gaussian") {
      c.data.source = DataSource::kGaussian;
    } else if (source == "two_class") {
      c.data.source = DataSource::kTwoClass;
    } else if (source == "file") {
      c.data.source = DataSource::kFile;
    } else {
      throw ConfigError("unknown data source '" + source + "'");
    }
    c.data.n = data.at("n").get<std::size_t>();
    c.data.d = data.value("d", Eigen::Index{0});
    if (data.contains("mu")) {
      c.data.mu = data.at("mu").is_array() ? data.at("mu").get<std::vector<double>>()
                                           : std::vector<double>{data.at("mu").get<double>()};
    }
    c.data.separation = data.value("separation", 0.0);
    c.data.path = data.value("path", std::string());

    c.lambda = j.value("lambda", c.lambda);
    c.temperature = j.value("temperature", c.temperature);
    c.l2 = j.value("l2", c.l2);
    c.tol = j.value("tol", c.tol);
    const std::string mode = j.value("split_mode", std::string("exact"));
    if (mode == "exact") {
      c.split_mode = SplitMode::kExactCount;
    } else if (mode == "bernoulli") {
      c.split_mode = SplitMode::kBernoulli;
    } else {
      throw ConfigError("split_mode must be 'exact' or 'bernoulli'");
    }
    c.calibration_fraction = j.value("calibration_fraction", c.calibration_fraction);
    c.shadows = j.value("shadows", c.shadows);
    c.shadow_member_fraction = j.value("shadow_member_fraction", c.shadow_member_fraction);
    c.seed = j.value("seed", c.seed);
    c.repeats = j.value("repeats", c.repeats);
    c.cv_folds = j.value("cv_folds", c.cv_folds);
    c.threads = j.value("threads", c.threads);
    for (const auto& a : j.at("attacks")) c.attacks.push_back(ParseAttack(a.get<std::string>()));
    c.output = j.value("output", c.output);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  c.Validate();
  return c;
}

}  // namespace mia
