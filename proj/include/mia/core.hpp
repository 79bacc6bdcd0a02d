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

// Datasets, membership splits and the synthetic data generators.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mia/error.hpp"
#include "mia/rng.hpp"

namespace mia {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Sample {
  Vector features;
  int label = 0;
};

class Dataset {
 public:
  Dataset() = default;

  Dataset(std::vector<Sample> samples, int num_classes)
      : samples_(std::move(samples)), num_classes_(num_classes) {
    Validate();
  }

  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  Eigen::Index dim() const {
    return samples_.empty() ? 0 : samples_.front().features.size();
  }
  int num_classes() const { return num_classes_; }

  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<Sample>& samples() const { return samples_; }

  auto begin() const { return samples_.begin(); }
  auto end() const { return samples_.end(); }

  /// Samples at `indices`, in that order.
  Dataset Subset(std::span<const std::size_t> indices) const {
    std::vector<Sample> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) {
      if (i >= samples_.size()) throw DataError("subset index out of range");
      out.push_back(samples_[i]);
    }
    return Dataset(std::move(out), num_classes_);
  }

 private:
  void Validate() const {
    if (samples_.empty()) throw DataError("dataset must be nonempty");
    if (num_classes_ < 1) throw DataError("num_classes must be >= 1");
    const Eigen::Index d = samples_.front().features.size();
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      const Sample& s = samples_[i];
      if (s.features.size() != d) {
        throw DataError("sample " + std::to_string(i) + " has dimension " +
                        std::to_string(s.features.size()) + ", expected " +
                        std::to_string(d));
      }
      if (s.label < 0 || s.label >= num_classes_) {
        throw DataError("sample " + std::to_string(i) + " has label " +
                        std::to_string(s.label) + " outside [0, " +
                        std::to_string(num_classes_) + ")");
      }
    }
  }

  std::vector<Sample> samples_;
  int num_classes_ = 1;
};

/// Membership mask over a dataset plus the prior P(member).
struct SplitSpec {
  std::vector<std::uint8_t> mask;
  double lambda = 0.5;

  std::size_t size() const { return mask.size(); }
  bool is_member(std::size_t i) const { return mask[i] != 0; }

  std::size_t num_members() const {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
  }

  std::vector<std::size_t> members() const { return Indices(true); }
  std::vector<std::size_t> non_members() const { return Indices(false); }

  void CheckAgainst(const Dataset& data) const {
    if (mask.size() != data.size()) {
      throw DataError("split mask length " + std::to_string(mask.size()) +
                      " != dataset size " + std::to_string(data.size()));
    }
  }

 private:
  std::vector<std::size_t> Indices(bool member) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if ((mask[i] != 0) == member) out.push_back(i);
    }
    return out;
  }
};

enum class SplitMode { kBernoulli, kExactCount };

inline void CheckSplitArgs(std::size_t n, double lambda) {
  if (n < 2) throw ConfigError("split needs n >= 2");
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw ConfigError("lambda must lie in (0, 1), got " + std::to_string(lambda));
  }
}

/// Independent Bernoulli(lambda) membership bits: bit i is set iff the i-th
/// uniform draw is < lambda.
inline SplitSpec DrawSplit(std::size_t n, double lambda, RngSeed seed) {
  CheckSplitArgs(n, lambda);
  Rng rng(seed);
  SplitSpec split{std::vector<std::uint8_t>(n, 0), lambda};
  for (auto& bit : split.mask) bit = rng.Bernoulli(lambda) ? 1 : 0;
  return split;
}

/// Uniform random permutation of 0..n-1 (Fisher-Yates).
inline std::vector<std::size_t> RandomPermutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    std::swap(perm[i - 1], perm[rng.UniformInt(i)]);
  }
  return perm;
}

/// Exactly round(lambda * n) members, chosen uniformly at random.
inline SplitSpec DrawExactSplit(std::size_t n, double lambda, RngSeed seed) {
  CheckSplitArgs(n, lambda);
  Rng rng(seed);
  const auto count = static_cast<std::size_t>(std::llround(lambda * static_cast<double>(n)));
  SplitSpec split{std::vector<std::uint8_t>(n, 0), lambda};
  const auto perm = RandomPermutation(n, rng);
  for (std::size_t k = 0; k < count; ++k) split.mask[perm[k]] = 1;
  return split;
}

inline SplitSpec DrawSplit(std::size_t n, double lambda, RngSeed seed,
                           SplitMode mode) {
  return mode == SplitMode::kBernoulli ? DrawSplit(n, lambda, seed)
                                       : DrawExactSplit(n, lambda, seed);
}

/// n i.i.d. draws from N(mu, I). Labels are all 0.
inline Dataset GenGaussianDataset(std::size_t n, Eigen::Index d, const Vector& mu,
                                  RngSeed seed) {
  if (n < 1) throw ConfigError("gaussian dataset needs n >= 1");
  if (d < 1 || mu.size() != d) {
    throw ConfigError("mu has dimension " + std::to_string(mu.size()) +
                      ", expected d = " + std::to_string(d));
  }
  Rng rng(seed);
  std::vector<Sample> samples(n);
  for (auto& s : samples) {
    s.features.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) s.features[j] = mu[j] + rng.Normal();
  }
  return Dataset(std::move(samples), 1);
}

/// Two balanced classes drawn from N(-(sep/2) e1, I) (label 0) and
/// N(+(sep/2) e1, I) (label 1). Labels alternate 0, 1, 0, 1, ...
inline Dataset GenTwoClassFeatures(std::size_t n, Eigen::Index d, double separation,
                                   RngSeed seed) {
  if (n == 0 || n % 2 != 0) throw ConfigError("two-class dataset needs an even n > 0");
  if (d < 1) throw ConfigError("two-class dataset needs d >= 1");
  if (!(separation >= 0.0)) throw ConfigError("separation must be >= 0");
  Rng rng(seed);
  std::vector<Sample> samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    Sample& s = samples[i];
    s.label = static_cast<int>(i % 2);
    s.features.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) s.features[j] = rng.Normal();
    s.features[0] += (s.label == 1 ? 0.5 : -0.5) * separation;
  }
  return Dataset(std::move(samples), 2);
}

}  // namespace mia
