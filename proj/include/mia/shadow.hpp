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

// Shadow models and estimation of the calibration thresholds τ.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "mia/attacks.hpp"
#include "mia/core.hpp"
#include "mia/error.hpp"
#include "mia/eval.hpp"
#include "mia/models.hpp"
#include "mia/rng.hpp"

namespace mia {

struct ShadowEnsemble {
  Dataset pool;
  std::vector<ModelParams> models;
  std::vector<SplitSpec> masks;
  std::vector<RngSeed> seeds;  // split seed of each shadow

  std::size_t size() const { return models.size(); }
};

/// Runs fn(0) .. fn(count-1) on up to `threads` workers. If any call throws,
/// the exception of the lowest failing index is rethrown after all workers
/// finish.
template <class Fn>
void ParallelFor(std::size_t count, int threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(count);
  auto run = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < count; i += step) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count < 2) {
    run(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(workers, count); ++w) {
      pool.emplace_back(run, w, std::min(workers, count));
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// K shadows, each trained on an independent Bernoulli(member_fraction)
/// subset of the pool. Shadow k uses split seed DeriveSeed(seed, k), so the
/// ensemble does not depend on the thread count.
inline ShadowEnsemble TrainShadows(const Dataset& pool, std::size_t num_shadows,
                                   double member_fraction, RngSeed seed,
                                   const TrainerConfig& trainer, int threads = 1,
                                   SplitMode mode = SplitMode::kBernoulli) {
  if (num_shadows < 1) throw ConfigError("shadow ensemble needs K >= 1");
  if (!(member_fraction > 0.0 && member_fraction < 1.0)) {
    throw ConfigError("shadow member fraction must lie in (0, 1)");
  }
  ShadowEnsemble ensemble{pool, std::vector<ModelParams>(num_shadows),
                          std::vector<SplitSpec>(num_shadows),
                          std::vector<RngSeed>(num_shadows)};
  ParallelFor(num_shadows, threads, [&](std::size_t k) {
    const RngSeed split_seed = DeriveSeed(seed, k);
    ensemble.seeds[k] = split_seed;
    ensemble.masks[k] = DrawSplit(pool.size(), member_fraction, split_seed, mode);
    try {
      ensemble.models[k] = Train(pool, ensemble.masks[k], trainer);
    } catch (const TrainingError& e) {
      throw TrainingError("shadow " + std::to_string(k) + ": " + e.what(), e.grad_norm());
    } catch (const Error& e) {
      throw Error(e.kind(), "shadow " + std::to_string(k) + ": " + e.what());
    }
  });
  return ensemble;
}

/// losses[k][i] = ℓ(θ_k, z_i).
inline std::vector<std::vector<double>> ShadowLosses(const ShadowEnsemble& ensemble) {
  std::vector<std::vector<double>> losses(ensemble.size());
  for (std::size_t k = 0; k < ensemble.size(); ++k) {
    losses[k].reserve(ensemble.pool.size());
    for (const Sample& z : ensemble.pool) losses[k].push_back(SampleLoss(ensemble.models[k], z));
  }
  return losses;
}

/// Single loss threshold maximizing the accuracy of "loss <= τ  =>  member"
/// over every (shadow, sample) pair. `losses[k][i]` is the loss of shadow k
/// on sample i and `masks[k]` its membership mask.
inline TauEstimate EstimateTauGlobal(const std::vector<std::vector<double>>& losses,
                                     std::span<const SplitSpec> masks) {
  if (losses.empty() || losses.size() != masks.size()) {
    throw CalibrationError("global tau needs K >= 1 shadows with one mask each");
  }
  std::vector<double> values;
  std::vector<std::uint8_t> member;
  for (std::size_t k = 0; k < losses.size(); ++k) {
    if (losses[k].size() != masks[k].size()) {
      throw CalibrationError("shadow " + std::to_string(k) + ": mask length mismatch");
    }
    values.insert(values.end(), losses[k].begin(), losses[k].end());
    member.insert(member.end(), masks[k].mask.begin(), masks[k].mask.end());
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*lo == *hi) {
    TauEstimate tau = TauEstimate::Global(*lo);
    tau.degenerate = true;
    return tau;
  }
  return TauEstimate::Global(SearchThreshold(values, member, Direction::kPositiveBelow).threshold);
}

inline TauEstimate EstimateTauGlobal(const ShadowEnsemble& ensemble) {
  return EstimateTauGlobal(ShadowLosses(ensemble), ensemble.masks);
}

/// Per-sample τ(z): for each sample, the loss threshold that best separates
/// the shadows trained on it (below) from the others (above). Separation is
/// measured by balanced accuracy.
///
/// A sample whose shadows do no better than chance would get τ = ±∞ and an
/// infinite score. Such samples take the pooled global τ instead (or the mean
/// loss if that is infinite too) and are listed in `fallback`.
inline TauEstimate EstimateTauPerSample(const std::vector<std::vector<double>>& losses,
                                        std::span<const SplitSpec> masks) {
  if (losses.empty() || losses.size() != masks.size()) {
    throw CalibrationError("per-sample tau needs K >= 1 shadows with one mask each");
  }
  const std::size_t num_shadows = losses.size();
  const std::size_t n = losses.front().size();
  for (std::size_t k = 0; k < num_shadows; ++k) {
    if (losses[k].size() != n || masks[k].size() != n) {
      throw CalibrationError("shadow " + std::to_string(k) + ": size mismatch");
    }
  }
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t members = 0;
    for (const auto& m : masks) members += m.mask[i];
    if (members == 0 || members == num_shadows) bad.push_back(i);
  }
  if (!bad.empty()) {
    std::string list;
    for (std::size_t k = 0; k < bad.size() && k < 20; ++k) {
      list += (k ? ", " : "") + std::to_string(bad[k]);
    }
    if (bad.size() > 20) list += ", ...";
    throw CalibrationError(std::to_string(bad.size()) +
                           " samples lack a member or non-member shadow: " + list);
  }

  std::vector<double> taus(n);
  std::vector<double> values(num_shadows);
  std::vector<std::uint8_t> member(num_shadows);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t num_members = 0;
    for (std::size_t k = 0; k < num_shadows; ++k) {
      values[k] = losses[k][i];
      member[k] = masks[k].mask[i];
      num_members += member[k];
    }
    const double w_pos = 0.5 / static_cast<double>(num_members);
    const double w_neg = 0.5 / static_cast<double>(num_shadows - num_members);
    taus[i] = SearchThreshold(values, member, Direction::kPositiveBelow, w_pos, w_neg, 1.0)
                  .threshold;
  }
  TauEstimate tau = TauEstimate::PerSample(std::move(taus));
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(tau.per_sample[i])) tau.fallback.push_back(i);
  }
  if (!tau.fallback.empty()) {
    double pooled = *EstimateTauGlobal(losses, masks).global;
    if (!std::isfinite(pooled)) {
      double sum = 0.0;
      for (const auto& row : losses) {
        for (double l : row) sum += l;
      }
      pooled = sum / static_cast<double>(num_shadows * n);
    }
    for (std::size_t i : tau.fallback) tau.per_sample[i] = pooled;
  }
  return tau;
}

inline TauEstimate EstimateTauPerSample(const ShadowEnsemble& ensemble) {
  return EstimateTauPerSample(ShadowLosses(ensemble), ensemble.masks);
}

struct MonteCarloTauResult {
  double tau = 0.0;        // −T log mean_j e^{−ℓ(t_j, z)/T}
  double mean_loss = 0.0;  // mean_j ℓ(t_j, z); upper bound on tau (Jensen)
};

/// τ from precomputed losses ℓ(t_j, z) of posterior draws t_j. The exponent
/// is shifted by its maximum before averaging.
inline MonteCarloTauResult MonteCarloTauFromLosses(std::span<const double> losses,
                                                   double temperature) {
  if (losses.empty()) throw NumericalError("monte carlo tau needs at least one draw");
  if (!(temperature > 0.0)) throw DomainError("temperature must be > 0");
  double top = -std::numeric_limits<double>::infinity();
  for (double l : losses) top = std::max(top, -l / temperature);
  if (!std::isfinite(top)) throw NumericalError("monte carlo tau: all exponents are -inf");
  double sum = 0.0;
  double loss_sum = 0.0;
  for (double l : losses) {
    sum += std::exp(-l / temperature - top);
    loss_sum += l;
  }
  const double count = static_cast<double>(losses.size());
  return {-temperature * (top + std::log(sum / count)), loss_sum / count};
}

/// τ(z) estimated from `num_draws` parameters drawn by `sampler`
/// (anything with `Vector Next()`), using `loss(t, z)`.
template <class Sampler, class LossFn>
MonteCarloTauResult MonteCarloTau(const Sample& z, Sampler& sampler, LossFn&& loss,
                                  double temperature, std::size_t num_draws) {
  if (num_draws < 1) throw NumericalError("monte carlo tau needs num_draws >= 1");
  std::vector<double> losses(num_draws);
  for (auto& l : losses) l = loss(sampler.Next(), z);
  return MonteCarloTauFromLosses(losses, temperature);
}

/// ½‖z − t‖², the Gaussian loss as a function of a raw parameter vector.
inline double GaussianLossAt(const Vector& t, const Sample& z) {
  return 0.5 * (z.features - t).squaredNorm();
}

}  // namespace mia
