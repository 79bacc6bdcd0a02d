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

// Membership score functions. Higher score means "more likely a member".
// Additive constants (the global τ of the loss-threshold attack, the
// normalizer of the Gaussian τ(z), the prior log-odds) are left out of the
// scores; threshold selection absorbs them, so scores are comparable only
// within one attack.

#pragma once

#include <Eigen/Cholesky>

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mia/core.hpp"
#include "mia/error.hpp"
#include "mia/models.hpp"

namespace mia {

struct ScoreRecord {
  std::size_t index = 0;
  double score = 0.0;
  bool truth = false;  // ground-truth membership
};

/// Calibration thresholds: one global value, or one per pool sample.
struct TauEstimate {
  std::optional<double> global;
  std::vector<double> per_sample;
  bool degenerate = false;  // all calibration losses were equal
  // Samples whose shadows could not be separated; they use the pooled τ.
  std::vector<std::size_t> fallback;

  static TauEstimate Global(double tau) { return TauEstimate{tau, {}, false, {}}; }
  static TauEstimate PerSample(std::vector<double> taus) {
    return TauEstimate{std::nullopt, std::move(taus), false, {}};
  }

  double at(std::size_t i) const {
    if (!per_sample.empty()) {
      if (i >= per_sample.size()) {
        throw CalibrationError("no tau for sample " + std::to_string(i) + " (have " +
                               std::to_string(per_sample.size()) + ")");
      }
      return per_sample[i];
    }
    if (global) return *global;
    throw CalibrationError("empty tau estimate");
  }
};

enum class AttackKind {
  kZeroOne,
  kMalt,
  kMast,            // per-sample τ(z) estimated from shadow models
  kMastClosedForm,  // per-sample τ(z) in closed form (Gaussian model)
  kMatt,
  kMattFull,        // MATT plus the second-order correction
  kOptimal,         // exact Bayes-optimal score (Gaussian model, T = 1)
};

inline const char* AttackName(AttackKind kind) {
  switch (kind) {
    case AttackKind::kZeroOne: return "zero_one";
    case AttackKind::kMalt: return "malt";
    case AttackKind::kMast: return "mast";
    case AttackKind::kMastClosedForm: return "mast_closed_form";
    case AttackKind::kMatt: return "matt";
    case AttackKind::kMattFull: return "matt_full";
    case AttackKind::kOptimal: return "optimal";
  }
  return "unknown";
}

inline AttackKind ParseAttack(const std::string& name) {
  for (AttackKind k : {AttackKind::kZeroOne, AttackKind::kMalt, AttackKind::kMast,
                       AttackKind::kMastClosedForm, AttackKind::kMatt,
                       AttackKind::kMattFull, AttackKind::kOptimal}) {
    if (name == AttackName(k)) return k;
  }
  if (name == "0-1") return AttackKind::kZeroOne;
  throw ConfigError("unknown attack '" + name + "'");
}

/// 1 if the classifier predicts the label of z, else 0.
inline double ZeroOneScore(const ModelParams& params, const Sample& z) {
  if (params.kind != ModelKind::kLogisticRegression) {
    throw ModelError("0-1 attack needs a classifier, got " +
                     std::string(ModelKindName(params.kind)));
  }
  return LogregPredict(params, z) == z.label ? 1.0 : 0.0;
}

/// −ℓ(θ, z). For a classifier this is log φ_θ(x)_y.
inline double MaltScore(const ModelParams& params, const Sample& z) {
  return -SampleLoss(params, z);
}

/// τ(z) − ℓ(θ, z).
inline double MastScore(const ModelParams& params, const Sample& z, double tau) {
  return tau - SampleLoss(params, z);
}

inline double MastScore(const ModelParams& params, const Sample& z,
                        const TauEstimate& tau, std::size_t index) {
  return MastScore(params, z, tau.at(index));
}

/// n′/(2(n′+1)) ‖z − μ‖²: −log of the integral of e^{−ℓ(t, z)} against
/// t ~ N(μ, I/n′), up to an additive constant.
inline double GaussianTauClosedForm(const Sample& z, const Vector& mu,
                                    std::size_t n_prime) {
  if (n_prime < 1) throw ModelError("closed-form tau needs n' >= 1");
  if (z.features.size() != mu.size()) {
    throw ModelError("closed-form tau: sample dimension " +
                     std::to_string(z.features.size()) + " != mu dimension " +
                     std::to_string(mu.size()));
  }
  const double np = static_cast<double>(n_prime);
  return np / (2.0 * (np + 1.0)) * (z.features - mu).squaredNorm();
}

/// The additive constant dropped by GaussianTauClosedForm:
/// (d/2) log((n′+1)/n′).
inline double GaussianTauConstant(Eigen::Index d, std::size_t n_prime) {
  const double np = static_cast<double>(n_prime);
  return 0.5 * static_cast<double>(d) * std::log((np + 1.0) / np);
}

/// E over z ~ N(μ, I) of the closed-form τ(z): n′ d / (2(n′+1)).
inline double GaussianGlobalTau(Eigen::Index d, std::size_t n_prime) {
  const double np = static_cast<double>(n_prime);
  return np / (2.0 * (np + 1.0)) * static_cast<double>(d);
}

/// Bayes-optimal score for the Gaussian mean model: τ(z) − ℓ(θ, z) with the
/// exact τ. Defined at T = 1 only.
inline double GaussianOptimalScore(const ModelParams& params, const Sample& z,
                                   const Vector& mu, std::size_t n_prime) {
  if (params.kind != ModelKind::kGaussianMean) {
    throw ModelError("optimal score is only available for the gaussian mean model");
  }
  if (params.temperature != 1.0) {
    throw ModelError("optimal score is only available at T = 1");
  }
  return GaussianTauClosedForm(z, mu, n_prime) - GaussianLoss(params, z);
}

/// log(λ / (1 − λ))
inline double PriorLogOdds(double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw DomainError("lambda must lie in (0, 1)");
  return std::log(lambda / (1.0 - lambda));
}

/// P(member | θ, z) = σ(s + log(λ/(1−λ))).
inline double MembershipPosterior(double score, double lambda) {
  return Sigmoid(score + PriorLogOdds(lambda));
}

namespace detail {
inline void CheckSameFamily(const ModelParams& a, const ModelParams& b) {
  if (a.kind != b.kind || a.dim() != b.dim()) {
    throw ModelError("MATT needs two parameter vectors of the same family and dimension");
  }
}
}  // namespace detail

/// −(θ − θ₀*)ᵀ ∇ℓ(θ₀*, z). Positive when θ moved from θ₀* along the descent
/// direction of z's loss.
inline double MattScore(const ModelParams& params, const ModelParams& reference,
                        const Sample& z) {
  detail::CheckSameFamily(params, reference);
  const Vector grad = SampleLossGradient(reference, z);
  return -(params.theta - reference.theta).dot(grad);
}

/// Cholesky factor of the reference Hessian, applied as H⁻¹v.
class HessianInverse {
 public:
  explicit HessianInverse(const Matrix& hessian) : llt_(hessian) {
    if (hessian.rows() != hessian.cols()) throw NumericalError("Hessian is not square");
    if (llt_.info() != Eigen::Success) {
      throw NumericalError("Hessian is not positive definite");
    }
  }

  Vector Apply(const Vector& v) const { return llt_.solve(v); }
  Eigen::Index dim() const { return llt_.rows(); }

 private:
  Eigen::LLT<Matrix> llt_;
};

struct MattTerms {
  double first_order = 0.0;  // −(θ − θ₀*)ᵀ g
  double correction = 0.0;   // −½ gᵀ H⁻¹ g, always ≤ 0

  double total() const { return first_order + correction; }
};

inline MattTerms MattFullTerms(const ModelParams& params, const ModelParams& reference,
                               const Sample& z, const HessianInverse& hinv) {
  detail::CheckSameFamily(params, reference);
  if (hinv.dim() != params.dim()) throw NumericalError("Hessian dimension mismatch");
  const Vector grad = SampleLossGradient(reference, z);
  MattTerms terms;
  terms.first_order = -(params.theta - reference.theta).dot(grad);
  terms.correction = -0.5 * grad.dot(hinv.Apply(grad));
  return terms;
}

inline double MattFullScore(const ModelParams& params, const ModelParams& reference,
                            const Sample& z, const HessianInverse& hinv) {
  return MattFullTerms(params, reference, z, hinv).total();
}

}  // namespace mia
