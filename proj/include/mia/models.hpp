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

// The two tractable model families: a Gaussian mean estimator and binary
// L2-regularized logistic regression (no intercept; append a constant
// feature if one is wanted).

#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mia/core.hpp"
#include "mia/error.hpp"
#include "mia/rng.hpp"

namespace mia {

enum class ModelKind { kGaussianMean, kLogisticRegression };

inline const char* ModelKindName(ModelKind kind) {
  return kind == ModelKind::kGaussianMean ? "gaussian_mean" : "logistic_regression";
}

inline ModelKind ParseModelKind(const std::string& name) {
  if (name == "gaussian_mean") return ModelKind::kGaussianMean;
  if (name == "logistic_regression") return ModelKind::kLogisticRegression;
  throw ConfigError("unknown model kind '" + name + "'");
}

struct ModelParams {
  ModelKind kind = ModelKind::kGaussianMean;
  Vector theta;
  double temperature = 1.0;
  double l2 = 0.0;  // only meaningful for logistic regression

  Eigen::Index dim() const { return theta.size(); }
};

struct LossReport {
  double loss = 0.0;
  std::optional<Vector> gradient;
  std::optional<Matrix> hessian;
};

namespace detail {

inline void CheckDims(const ModelParams& params, const Sample& z) {
  if (params.theta.size() != z.features.size()) {
    throw ModelError("parameter dimension " + std::to_string(params.theta.size()) +
                     " does not match sample dimension " +
                     std::to_string(z.features.size()));
  }
}

inline void CheckKind(const ModelParams& params, ModelKind expected) {
  if (params.kind != expected) {
    throw ModelError(std::string("expected a ") + ModelKindName(expected) +
                     " model, got " + ModelKindName(params.kind));
  }
}

// log(1 + e^m) without overflow.
inline double Softplus(double m) {
  return m > 0.0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
}

}  // namespace detail

inline double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------------------
// Gaussian mean estimator

/// ½‖z − θ‖²
inline double GaussianLoss(const ModelParams& params, const Sample& z) {
  detail::CheckKind(params, ModelKind::kGaussianMean);
  detail::CheckDims(params, z);
  return 0.5 * (z.features - params.theta).squaredNorm();
}

inline Vector GaussianLossGradient(const ModelParams& params, const Sample& z) {
  detail::CheckKind(params, ModelKind::kGaussianMean);
  detail::CheckDims(params, z);
  return params.theta - z.features;
}

/// Mean of the member samples.
inline ModelParams TrainGaussianMean(const Dataset& data, const SplitSpec& split,
                                     double temperature = 1.0) {
  split.CheckAgainst(data);
  Vector sum = Vector::Zero(data.dim());
  std::size_t count = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!split.is_member(i)) continue;
    sum += data[i].features;
    ++count;
  }
  if (count == 0) throw TrainingError("gaussian mean: no member samples");
  return ModelParams{ModelKind::kGaussianMean, sum / static_cast<double>(count),
                     temperature, 0.0};
}

// ---------------------------------------------------------------------------
// Binary logistic regression
//
// Per-sample loss: softplus(θᵀx) − y·θᵀx + (share/2)‖θ‖², where `share` is
// the portion of the L2 penalty carried by this sample. Training uses
// share = l2/n′ so that the member losses add up to the trained objective.
// Attack scores use share = 0: the total penalty does not depend on which
// samples are members.

struct LossParts {
  bool gradient = true;
  bool hessian = false;
};

inline LossReport LogregLoss(const ModelParams& params, const Sample& z,
                             double penalty_share, LossParts parts = {}) {
  detail::CheckKind(params, ModelKind::kLogisticRegression);
  detail::CheckDims(params, z);
  if (!z.features.allFinite()) throw ModelError("non-finite features");
  if (z.label != 0 && z.label != 1) {
    throw ModelError("logistic regression supports labels {0, 1}, got " +
                     std::to_string(z.label));
  }
  const Vector& x = z.features;
  const Vector& w = params.theta;
  const double margin = w.dot(x);
  const double y = z.label;

  LossReport report;
  report.loss = detail::Softplus(margin) - y * margin +
                0.5 * penalty_share * w.squaredNorm();
  const double p = Sigmoid(margin);
  if (parts.gradient) report.gradient = (p - y) * x + penalty_share * w;
  if (parts.hessian) {
    Matrix h = (p * (1.0 - p)) * (x * x.transpose());
    h.diagonal().array() += penalty_share;
    report.hessian = std::move(h);
  }
  return report;
}

/// −log φ_θ(x)_y, the cross-entropy without any penalty share.
inline double LogregDataLoss(const ModelParams& params, const Sample& z) {
  return LogregLoss(params, z, 0.0, {.gradient = false}).loss;
}

inline Vector LogregDataGradient(const ModelParams& params, const Sample& z) {
  return *LogregLoss(params, z, 0.0).gradient;
}

/// Predicted class: 1 iff P(y = 1 | x) > 1/2.
inline int LogregPredict(const ModelParams& params, const Sample& z) {
  detail::CheckKind(params, ModelKind::kLogisticRegression);
  detail::CheckDims(params, z);
  return params.theta.dot(z.features) > 0.0 ? 1 : 0;
}

/// Σ_i data loss over `indices` plus (l2/2)‖θ‖², with gradient and Hessian.
struct Objective {
  double value = 0.0;
  Vector gradient;
  Matrix hessian;
};

inline Objective LogregObjective(const ModelParams& params, const Dataset& data,
                                 std::span<const std::size_t> indices, double l2,
                                 bool with_hessian = true) {
  const Eigen::Index d = params.theta.size();
  Objective obj{0.0, Vector::Zero(d), with_hessian ? Matrix::Zero(d, d) : Matrix()};
  const Vector& w = params.theta;
  for (std::size_t i : indices) {
    const Sample& z = data[i];
    const double margin = w.dot(z.features);
    const double p = Sigmoid(margin);
    obj.value += detail::Softplus(margin) - z.label * margin;
    obj.gradient.noalias() += (p - z.label) * z.features;
    if (with_hessian) {
      obj.hessian.selfadjointView<Eigen::Lower>().rankUpdate(z.features, p * (1.0 - p));
    }
  }
  obj.value += 0.5 * l2 * w.squaredNorm();
  obj.gradient += l2 * w;
  if (with_hessian) {
    obj.hessian = obj.hessian.selfadjointView<Eigen::Lower>();
    obj.hessian.diagonal().array() += l2;
  }
  return obj;
}

struct TrainOptions {
  double l2 = 1.0;
  double tol = 1e-8;
  int max_iterations = 100;
};

/// Minimizes the member objective by damped Newton iterations from θ = 0.
/// Stops once ‖∇‖ ≤ tol.
inline ModelParams TrainLogreg(const Dataset& data, std::span<const std::size_t> members,
                               const TrainOptions& opts, double temperature = 1.0) {
  if (!(opts.l2 > 0.0)) throw TrainingError("logistic regression needs l2 > 0");
  if (members.empty()) throw TrainingError("logistic regression: no member samples");
  bool seen[2] = {false, false};
  for (std::size_t i : members) {
    const int y = data[i].label;
    if (y != 0 && y != 1) throw ModelError("labels must be 0 or 1");
    if (!data[i].features.allFinite()) throw ModelError("non-finite features");
    seen[y] = true;
  }
  if (!seen[0] || !seen[1]) {
    throw TrainingError("logistic regression needs members from both classes");
  }

  ModelParams params{ModelKind::kLogisticRegression, Vector::Zero(data.dim()),
                     temperature, opts.l2};
  Objective obj = LogregObjective(params, data, members, opts.l2);
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    const double gnorm = obj.gradient.norm();
    if (gnorm <= opts.tol) return params;
    const Vector step = obj.hessian.llt().solve(obj.gradient);
    const double slope = obj.gradient.dot(step);

    // Backtracking (Armijo). A full step is taken near the optimum.
    double t = 1.0;
    ModelParams trial = params;
    Objective trial_obj;
    for (int k = 0; k < 60; ++k) {
      trial.theta = params.theta - t * step;
      trial_obj = LogregObjective(trial, data, members, opts.l2);
      if (trial_obj.value <= obj.value - 1e-4 * t * slope) break;
      // Near the optimum the decrease is below rounding of the objective.
      const double noise = 1e-13 * (1.0 + std::abs(obj.value));
      if (trial_obj.value <= obj.value + noise && trial_obj.gradient.norm() < gnorm) break;
      t *= 0.5;
    }
    params = std::move(trial);
    obj = std::move(trial_obj);
  }
  const double gnorm = obj.gradient.norm();
  if (gnorm <= opts.tol) return params;
  throw TrainingError("logistic regression did not converge: gradient norm " +
                          std::to_string(gnorm) + " > tol " + std::to_string(opts.tol),
                      gnorm);
}

inline ModelParams TrainLogreg(const Dataset& data, const SplitSpec& split,
                               const TrainOptions& opts, double temperature = 1.0) {
  split.CheckAgainst(data);
  const auto members = split.members();
  return TrainLogreg(data, members, opts, temperature);
}

// ---------------------------------------------------------------------------
// Family-generic helpers

struct TrainerConfig {
  ModelKind kind = ModelKind::kGaussianMean;
  TrainOptions logreg;
  double temperature = 1.0;
};

inline ModelParams Train(const Dataset& data, const SplitSpec& split,
                         const TrainerConfig& config) {
  return config.kind == ModelKind::kGaussianMean
             ? TrainGaussianMean(data, split, config.temperature)
             : TrainLogreg(data, split, config.logreg, config.temperature);
}

/// Per-sample loss used by the attacks (penalty-free for logistic regression).
inline double SampleLoss(const ModelParams& params, const Sample& z) {
  return params.kind == ModelKind::kGaussianMean ? GaussianLoss(params, z)
                                                 : LogregDataLoss(params, z);
}

inline Vector SampleLossGradient(const ModelParams& params, const Sample& z) {
  return params.kind == ModelKind::kGaussianMean ? GaussianLossGradient(params, z)
                                                 : LogregDataGradient(params, z);
}

/// Hessian of the member objective that produced `params`.
inline Matrix MemberHessian(const ModelParams& params, const Dataset& data,
                            std::span<const std::size_t> members) {
  if (params.kind == ModelKind::kGaussianMean) {
    return static_cast<double>(members.size()) *
           Matrix::Identity(params.dim(), params.dim());
  }
  return LogregObjective(params, data, members, params.l2).hessian;
}

// ---------------------------------------------------------------------------
// Exact posterior of the Gaussian mean model at unit temperature

/// Draws i.i.d. parameters from N(center, I/n′).
class GaussianPosteriorSampler {
 public:
  GaussianPosteriorSampler(Vector center, std::size_t n_prime, RngSeed seed)
      : center_(std::move(center)),
        scale_(1.0 / std::sqrt(static_cast<double>(n_prime))),
        rng_(seed) {
    if (n_prime < 1) throw ModelError("posterior sampler needs n' >= 1");
  }

  /// Posterior of the model trained on the members of `split`.
  static GaussianPosteriorSampler FromSplit(const Dataset& data, const SplitSpec& split,
                                            RngSeed seed, double temperature = 1.0) {
    if (temperature != 1.0) {
      throw ModelError("gaussian posterior is only available in closed form at T = 1");
    }
    const ModelParams mean = TrainGaussianMean(data, split);
    return GaussianPosteriorSampler(mean.theta, split.num_members(), seed);
  }

  Vector Next() {
    Vector t(center_.size());
    for (Eigen::Index j = 0; j < t.size(); ++j) t[j] = center_[j] + scale_ * rng_.Normal();
    return t;
  }

  const Vector& center() const { return center_; }

 private:
  Vector center_;
  double scale_;
  Rng rng_;
};

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json ToJson(const ModelParams& params) {
  return nlohmann::json{
      {"kind", ModelKindName(params.kind)},
      {"d", params.theta.size()},
      {"T", params.temperature},
      {"l2", params.l2},
      {"theta", std::vector<double>(params.theta.data(),
                                    params.theta.data() + params.theta.size())},
  };
}

inline ModelParams ModelParamsFromJson(const nlohmann::json& doc) {
  try {
    ModelParams params;
    params.kind = ParseModelKind(doc.at("kind").get<std::string>());
    params.temperature = doc.at("T").get<double>();
    params.l2 = doc.value("l2", 0.0);
    const auto theta = doc.at("theta").get<std::vector<double>>();
    if (static_cast<std::size_t>(doc.at("d").get<long long>()) != theta.size()) {
      throw ModelError("model document: d does not match theta length");
    }
    params.theta = Eigen::Map<const Vector>(theta.data(), static_cast<Eigen::Index>(theta.size()));
    if (!params.theta.allFinite()) throw ModelError("model document: non-finite theta");
    if (!(params.temperature > 0.0)) throw ModelError("model document: T must be > 0");
    return params;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("malformed model document: ") + e.what());
  }
}

}  // namespace mia
