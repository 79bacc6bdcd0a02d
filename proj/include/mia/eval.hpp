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

// Attack metrics and privacy-bound calculators.

#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mia/attacks.hpp"
#include "mia/error.hpp"
#include "mia/models.hpp"
#include "mia/rng.hpp"

namespace mia {

struct ThresholdResult {
  double threshold = 0.0;
  double accuracy = 0.0;
};

enum class Direction {
  kPositiveAbove,  // value >= t  =>  positive
  kPositiveBelow,  // value <= t  =>  positive
};

/// Exact maximizer of (weighted) accuracy of a one-sided threshold rule.
///
/// Candidates are −∞, the midpoints of consecutive distinct sorted values and
/// +∞; every distinct decision set is realized by exactly one of them. Each
/// positive counts `w_pos` and each negative `w_neg`; the returned accuracy is
/// the weighted correct count divided by `normalizer`. Ties go to the
/// smallest threshold.
inline ThresholdResult SearchThreshold(std::span<const double> values,
                                       std::span<const std::uint8_t> positive,
                                       Direction dir, double w_pos = 1.0,
                                       double w_neg = 1.0, double normalizer = 0.0) {
  const std::size_t n = values.size();
  if (n == 0 || positive.size() != n) throw EvaluationError("threshold search: bad input");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (double v : values) {
    if (!std::isfinite(v)) throw EvaluationError("threshold search: non-finite value");
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  if (normalizer == 0.0) normalizer = static_cast<double>(n);

  std::size_t num_pos = 0;
  for (auto p : positive) num_pos += p ? 1 : 0;
  const std::size_t num_neg = n - num_pos;

  // Counts of correct decisions at t = −∞.
  std::size_t tp = dir == Direction::kPositiveAbove ? num_pos : 0;
  std::size_t tn = dir == Direction::kPositiveAbove ? 0 : num_neg;
  auto score = [&] {
    return (w_pos * static_cast<double>(tp) + w_neg * static_cast<double>(tn)) / normalizer;
  };

  ThresholdResult best{-std::numeric_limits<double>::infinity(), score()};
  std::size_t k = 0;
  while (k < n) {
    const double v = values[order[k]];
    // Move the threshold just past every sample equal to v.
    while (k < n && values[order[k]] == v) {
      const bool pos = positive[order[k]] != 0;
      if (dir == Direction::kPositiveAbove) {
        pos ? --tp : ++tn;
      } else {
        pos ? ++tp : --tn;
      }
      ++k;
    }
    const double t = k < n ? std::midpoint(v, values[order[k]])
                           : std::numeric_limits<double>::infinity();
    const double acc = score();
    if (acc > best.accuracy) best = {t, acc};
  }
  return best;
}

namespace detail {

inline void CheckRecords(std::span<const ScoreRecord> records) {
  for (const auto& r : records) {
    if (!std::isfinite(r.score)) {
      throw EvaluationError("non-finite score for sample " + std::to_string(r.index));
    }
  }
}

inline std::size_t CountMembers(std::span<const ScoreRecord> records) {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(), [](const ScoreRecord& r) { return r.truth; }));
}

}  // namespace detail

/// Peak accuracy of "score >= t  =>  member" over all thresholds t.
inline ThresholdResult BestThresholdAccuracy(std::span<const ScoreRecord> records) {
  detail::CheckRecords(records);
  const std::size_t members = detail::CountMembers(records);
  if (members == 0 || members == records.size()) {
    throw EvaluationError("best threshold needs both member and non-member records");
  }
  std::vector<double> scores;
  std::vector<std::uint8_t> truth;
  scores.reserve(records.size());
  truth.reserve(records.size());
  for (const auto& r : records) {
    scores.push_back(r.score);
    truth.push_back(r.truth ? 1 : 0);
  }
  return SearchThreshold(scores, truth, Direction::kPositiveAbove);
}

/// Stratified k-fold estimate: the threshold is chosen on k−1 folds and
/// applied to the held-out fold; returns the overall fraction of correct
/// decisions. Members and non-members are dealt to folds separately so every
/// fold keeps the overall member fraction. Unstratified folds make the
/// training and held-out class balance anti-correlated, which pulls the
/// estimate below chance when the scores carry little signal.
inline double CrossValidatedAccuracy(std::span<const ScoreRecord> records, int folds,
                                     RngSeed seed) {
  detail::CheckRecords(records);
  if (folds < 2 || static_cast<std::size_t>(folds) > records.size()) {
    throw EvaluationError("cross-validation needs 2 <= folds <= n");
  }
  Rng rng(seed);
  const auto perm = RandomPermutation(records.size(), rng);
  std::vector<int> fold_of(records.size());
  std::size_t members = 0, non_members = 0;
  for (std::size_t i : perm) {
    std::size_t& rank = records[i].truth ? members : non_members;
    fold_of[i] = static_cast<int>(rank++ % static_cast<std::size_t>(folds));
  }
  std::size_t correct = 0;
  for (int f = 0; f < folds; ++f) {
    std::vector<double> scores;
    std::vector<std::uint8_t> truth;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (fold_of[i] == f) continue;
      scores.push_back(records[i].score);
      truth.push_back(records[i].truth ? 1 : 0);
    }
    if (scores.empty()) continue;
    const double t = SearchThreshold(scores, truth, Direction::kPositiveAbove).threshold;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (fold_of[i] == f && (records[i].score >= t) == records[i].truth) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

enum class PositiveClass { kMember, kNonMember };

/// Average precision of the ranking by score (descending), with tied scores
/// entering the ranking together: AP = Σ_t ΔRecall(t) · Precision(t) over
/// distinct score levels t. For non-member detection the scores are negated.
inline double MeanAveragePrecision(std::span<const ScoreRecord> records,
                                   PositiveClass positive_class) {
  detail::CheckRecords(records);
  const bool want_member = positive_class == PositiveClass::kMember;
  std::vector<std::pair<double, bool>> ranked;
  ranked.reserve(records.size());
  for (const auto& r : records) {
    ranked.emplace_back(want_member ? r.score : -r.score, r.truth == want_member);
  }
  const auto num_pos = static_cast<std::size_t>(std::count_if(
      ranked.begin(), ranked.end(), [](const auto& p) { return p.second; }));
  if (num_pos == 0) throw EvaluationError("average precision needs at least one positive");
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });

  // Accumulated in extended precision and rounded once, so the result is the
  // correctly rounded value of the exact rational in practice.
  long double sum = 0.0L;
  std::size_t seen = 0;
  std::size_t hits = 0;
  std::size_t k = 0;
  while (k < ranked.size()) {
    const double level = ranked[k].first;
    std::size_t level_hits = 0;
    while (k < ranked.size() && ranked[k].first == level) {
      level_hits += ranked[k].second ? 1 : 0;
      ++seen;
      ++k;
    }
    hits += level_hits;
    if (level_hits > 0) {
      sum += static_cast<long double>(level_hits) * static_cast<long double>(hits) /
             static_cast<long double>(seen);
    }
  }
  return static_cast<double>(sum / static_cast<long double>(num_pos));
}

/// Fraction of records where "score >= 1/2" agrees with membership. This is
/// the fixed decision rule of the 0-1 attack.
inline double ZeroOneAttackAccuracy(std::span<const ScoreRecord> records) {
  if (records.empty()) throw EvaluationError("no records");
  std::size_t correct = 0;
  for (const auto& r : records) correct += ((r.score >= 0.5) == r.truth) ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

namespace detail {
inline void CheckUnit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw DomainError(std::string(name) + " must lie in [0, 1], got " + std::to_string(v));
  }
}
}  // namespace detail

/// Accuracy of the 0-1 attack: λ p_train + (1 − λ)(1 − p_test).
inline double ZeroOneAccuracyFormula(double lambda, double p_train, double p_test) {
  detail::CheckUnit(lambda, "lambda");
  detail::CheckUnit(p_train, "p_train");
  detail::CheckUnit(p_test, "p_test");
  return lambda * p_train + (1.0 - lambda) * (1.0 - p_test);
}

/// Upper bound on P(member | θ, z) under ε-differential privacy: λ + ε/4.
inline double DpMembershipBound(double epsilon, double lambda) {
  if (!(epsilon >= 0.0)) throw DomainError("epsilon must be >= 0");
  detail::CheckUnit(lambda, "lambda");
  return std::min(1.0, lambda + epsilon / 4.0);
}

/// Upper bound under (ε, δ)-membership privacy at temperature T:
/// λ + ε/(4T) + δ.
inline double MembershipPrivacyBound(double epsilon, double delta, double temperature,
                                     double lambda) {
  if (!(epsilon >= 0.0)) throw DomainError("epsilon must be >= 0");
  detail::CheckUnit(delta, "delta");
  if (!(temperature > 0.0)) throw DomainError("temperature must be > 0");
  detail::CheckUnit(lambda, "lambda");
  return std::min(1.0, lambda + epsilon / (4.0 * temperature) + delta);
}

/// σ(u) ≤ σ(v) + max(u − v, 0)/4, with 1e-12 slack.
inline bool SigmoidLipschitzCheck(double u, double v) {
  return Sigmoid(u) <= Sigmoid(v) + std::max(u - v, 0.0) / 4.0 + 1e-12;
}

// ---------------------------------------------------------------------------

struct AttackReport {
  std::string attack;
  double threshold = 0.0;
  double accuracy = 0.0;
  double cv_accuracy = 0.0;
  double map_train = 0.0;
  double map_test = 0.0;
  std::size_t n = 0;
  double member_fraction = 0.0;
  std::uint64_t seed = 0;
  bool calibrated_on_evaluated = false;  // thresholds estimated on the tested samples
};

inline AttackReport Evaluate(std::span<const ScoreRecord> records, std::string attack,
                             std::uint64_t seed, int cv_folds = 2) {
  AttackReport report;
  report.attack = std::move(attack);
  const auto best = BestThresholdAccuracy(records);
  report.threshold = best.threshold;
  report.accuracy = best.accuracy;
  report.cv_accuracy = CrossValidatedAccuracy(records, cv_folds, RngSeed{Mix64(seed)});
  report.map_train = MeanAveragePrecision(records, PositiveClass::kMember);
  report.map_test = MeanAveragePrecision(records, PositiveClass::kNonMember);
  report.n = records.size();
  report.member_fraction =
      static_cast<double>(detail::CountMembers(records)) / static_cast<double>(records.size());
  report.seed = seed;
  return report;
}

/// JSON has no infinities; they are written as the strings "inf" / "-inf".
inline nlohmann::json JsonDouble(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double DoubleFromJson(const nlohmann::json& j) {
  if (j.is_string()) {
    if (j == "inf") return std::numeric_limits<double>::infinity();
    if (j == "-inf") return -std::numeric_limits<double>::infinity();
    throw DataError("expected a number, got " + j.dump());
  }
  return j.get<double>();
}

inline nlohmann::json ToJson(const AttackReport& r) {
  const nlohmann::json threshold = JsonDouble(r.threshold);
  return nlohmann::json{
      {"attack", r.attack},
      {"threshold", threshold},
      {"accuracy", r.accuracy},
      {"cv_accuracy", r.cv_accuracy},
      {"map_train", r.map_train},
      {"map_test", r.map_test},
      {"n", r.n},
      {"member_fraction", r.member_fraction},
      {"seed", r.seed},
      {"calibrated_on_evaluated", r.calibrated_on_evaluated},
  };
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;  // sample sd / sqrt(k); 0 for a single value
};

inline MeanSe MeanStdErr(std::span<const double> values) {
  if (values.empty()) throw EvaluationError("mean of an empty list");
  const double k = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= k;
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (k - 1.0) / k)};
}

/// Per-attack summary over repeated runs.
struct AggregateReport {
  std::string attack;
  std::size_t repeats = 0;
  MeanSe accuracy, cv_accuracy, map_train, map_test;
};

inline AggregateReport Aggregate(std::span<const AttackReport> reports) {
  if (reports.empty()) throw EvaluationError("no reports to aggregate");
  AggregateReport agg;
  agg.attack = reports.front().attack;
  agg.repeats = reports.size();
  std::vector<double> acc, cv, train, test;
  for (const auto& r : reports) {
    if (r.attack != agg.attack) throw EvaluationError("aggregate mixes attacks");
    acc.push_back(r.accuracy);
    cv.push_back(r.cv_accuracy);
    train.push_back(r.map_train);
    test.push_back(r.map_test);
  }
  agg.accuracy = MeanStdErr(acc);
  agg.cv_accuracy = MeanStdErr(cv);
  agg.map_train = MeanStdErr(train);
  agg.map_test = MeanStdErr(test);
  return agg;
}

}  // namespace mia
