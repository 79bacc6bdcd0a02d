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

#include "mia/eval.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

namespace mia {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<ScoreRecord> Records(std::initializer_list<std::pair<double, bool>> list) {
  std::vector<ScoreRecord> out;
  for (const auto& [score, truth] : list) out.push_back({out.size(), score, truth});
  return out;
}

// Random instance with heavy ties (scores on a coarse grid) and both classes.
std::vector<ScoreRecord> RandomInstance(Rng& rng) {
  const std::size_t n = 2 + rng.UniformInt(19);
  std::vector<ScoreRecord> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = {i, static_cast<double>(rng.UniformInt(6)) - 2.5, rng.Bernoulli(0.5)};
  }
  out[0].truth = true;
  out[1].truth = false;
  return out;
}

// Every threshold rule "score >= t" is realized by t = some score or t = +inf.
double BruteForceBestAccuracy(const std::vector<ScoreRecord>& r) {
  std::vector<double> candidates{kInf};
  for (const auto& x : r) candidates.push_back(x.score);
  double best = 0.0;
  for (double t : candidates) {
    int correct = 0;
    for (const auto& x : r) correct += (x.score >= t) == x.truth;
    best = std::max(best, correct / static_cast<double>(r.size()));
  }
  return best;
}

// Mean over positives of the precision at that positive's score level.
double BruteForceAp(const std::vector<ScoreRecord>& r, bool member_positive) {
  double sum = 0.0;
  int positives = 0;
  for (const auto& a : r) {
    if (a.truth != member_positive) continue;
    ++positives;
    const double sa = member_positive ? a.score : -a.score;
    int above = 0, above_pos = 0;
    for (const auto& b : r) {
      const double sb = member_positive ? b.score : -b.score;
      if (sb >= sa) {
        ++above;
        above_pos += b.truth == member_positive;
      }
    }
    sum += static_cast<double>(above_pos) / above;
  }
  return sum / positives;
}

TEST(SearchThresholdTest, MatchesBruteForceOnRandomTiedInstances) {
  Rng rng(RngSeed{1});
  for (int trial = 0; trial < 500; ++trial) {
    const auto r = RandomInstance(rng);
    const auto best = BestThresholdAccuracy(r);
    EXPECT_EQ(best.accuracy, BruteForceBestAccuracy(r)) << "trial " << trial;
    // The reported threshold realizes the reported accuracy.
    int correct = 0;
    for (const auto& x : r) correct += (x.score >= best.threshold) == x.truth;
    EXPECT_EQ(correct / static_cast<double>(r.size()), best.accuracy);
  }
}

TEST(SearchThresholdTest, PerfectSeparation) {
  const auto r = Records({{0.1, false}, {0.2, false}, {0.8, true}, {0.9, true}});
  const auto best = BestThresholdAccuracy(r);
  EXPECT_EQ(best.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(best.threshold, 0.5);
}

TEST(SearchThresholdTest, ConstantScoresGiveMajorityRate) {
  const auto r = Records({{1, true}, {1, true}, {1, true}, {1, false}, {1, false}});
  EXPECT_DOUBLE_EQ(BestThresholdAccuracy(r).accuracy, 0.6);
  EXPECT_EQ(BestThresholdAccuracy(r).threshold, -kInf);
  const auto r2 = Records({{1, true}, {1, false}, {1, false}, {1, false}});
  EXPECT_DOUBLE_EQ(BestThresholdAccuracy(r2).accuracy, 0.75);
  EXPECT_EQ(BestThresholdAccuracy(r2).threshold, kInf);
}

TEST(SearchThresholdTest, TiesGoToSmallestThreshold) {
  // t = 1.5 and t = 3.5 both give 3/4.
  const auto r = Records({{1, false}, {2, true}, {3, false}, {4, true}});
  const auto best = BestThresholdAccuracy(r);
  EXPECT_DOUBLE_EQ(best.accuracy, 0.75);
  EXPECT_DOUBLE_EQ(best.threshold, 1.5);
}

TEST(SearchThresholdTest, BelowDirectionAndWeights) {
  const std::vector<double> v{0.1, 0.2, 0.9};
  const std::vector<std::uint8_t> pos{1, 1, 0};
  const auto below = SearchThreshold(v, pos, Direction::kPositiveBelow);
  EXPECT_DOUBLE_EQ(below.threshold, 0.55);
  EXPECT_EQ(below.accuracy, 1.0);
  const auto weighted = SearchThreshold(v, pos, Direction::kPositiveBelow, 0.25, 0.5, 1.0);
  EXPECT_DOUBLE_EQ(weighted.accuracy, 1.0);
  EXPECT_THROW(SearchThreshold({}, {}, Direction::kPositiveAbove), EvaluationError);
}

TEST(BestThresholdAccuracyTest, AtLeastMajorityRate) {
  Rng rng(RngSeed{2});
  for (int trial = 0; trial < 300; ++trial) {
    const auto r = RandomInstance(rng);
    std::size_t members = 0;
    for (const auto& x : r) members += x.truth;
    const double majority =
        static_cast<double>(std::max(members, r.size() - members)) / static_cast<double>(r.size());
    EXPECT_GE(BestThresholdAccuracy(r).accuracy, majority);
  }
}

TEST(BestThresholdAccuracyTest, Errors) {
  EXPECT_THROW(BestThresholdAccuracy(Records({{1, true}, {2, true}})), EvaluationError);
  EXPECT_THROW(BestThresholdAccuracy(Records({{NAN, true}, {2, false}})), EvaluationError);
}

TEST(MeanAveragePrecisionTest, MatchesBruteForce) {
  Rng rng(RngSeed{3});
  for (int trial = 0; trial < 500; ++trial) {
    const auto r = RandomInstance(rng);
    EXPECT_NEAR(MeanAveragePrecision(r, PositiveClass::kMember), BruteForceAp(r, true), 1e-15);
    EXPECT_NEAR(MeanAveragePrecision(r, PositiveClass::kNonMember), BruteForceAp(r, false),
                1e-15);
  }
}

TEST(MeanAveragePrecisionTest, Examples) {
  EXPECT_EQ(MeanAveragePrecision(Records({{3, true}, {2, true}, {1, false}}),
                                 PositiveClass::kMember),
            1.0);
  EXPECT_DOUBLE_EQ(MeanAveragePrecision(Records({{2, false}, {1, true}}), PositiveClass::kMember),
                   0.5);
  // Positives at ranks 1 and 3: (1/1 + 2/3) / 2.
  EXPECT_DOUBLE_EQ(MeanAveragePrecision(Records({{3, true}, {2, false}, {1, true}}),
                                        PositiveClass::kMember),
                   (1.0 + 2.0 / 3.0) / 2.0);
  // Non-member detection ranks by ascending score.
  EXPECT_EQ(MeanAveragePrecision(Records({{3, true}, {1, false}}), PositiveClass::kNonMember), 1.0);
  // A single tie level: precision is the positive rate.
  EXPECT_DOUBLE_EQ(MeanAveragePrecision(Records({{0, true}, {0, false}, {0, false}, {0, true}}),
                                        PositiveClass::kMember),
                   0.5);
  EXPECT_THROW(MeanAveragePrecision(Records({{1, false}}), PositiveClass::kMember),
               EvaluationError);
}

TEST(MetricsTest, InvariantUnderIncreasingTransforms) {
  Rng rng(RngSeed{4});
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ScoreRecord> r(30);
    for (std::size_t i = 0; i < r.size(); ++i) {
      r[i] = {i, 4.0 * rng.Normal(), rng.Bernoulli(0.5)};
    }
    r[0].truth = true;
    r[1].truth = false;
    for (auto f : {+[](double x) { return 2.0 * x + 1.0; },
                   +[](double x) { return std::tanh(x / 10.0); }}) {
      auto t = r;
      for (auto& x : t) x.score = f(x.score);
      EXPECT_NEAR(BestThresholdAccuracy(t).accuracy, BestThresholdAccuracy(r).accuracy, 1e-12);
      for (auto pc : {PositiveClass::kMember, PositiveClass::kNonMember}) {
        EXPECT_NEAR(MeanAveragePrecision(t, pc), MeanAveragePrecision(r, pc), 1e-12);
      }
    }
  }
}

TEST(CrossValidatedAccuracyTest, SeparableAndDeterministic) {
  std::vector<ScoreRecord> r;
  // A wide gap between the classes keeps every fold's threshold inside it.
  for (std::size_t i = 0; i < 40; ++i) {
    r.push_back({i, static_cast<double>(i) + (i >= 20 ? 100.0 : 0.0), i >= 20});
  }
  EXPECT_EQ(CrossValidatedAccuracy(r, 2, RngSeed{5}), 1.0);
  EXPECT_EQ(CrossValidatedAccuracy(r, 5, RngSeed{6}), CrossValidatedAccuracy(r, 5, RngSeed{6}));
  EXPECT_THROW(CrossValidatedAccuracy(r, 1, RngSeed{0}), EvaluationError);
  EXPECT_THROW(CrossValidatedAccuracy(r, 41, RngSeed{0}), EvaluationError);
}

TEST(CrossValidatedAccuracyTest, CloseToInSample) {
  Rng rng(RngSeed{7});
  std::vector<ScoreRecord> r(400);
  for (std::size_t i = 0; i < r.size(); ++i) {
    const bool m = rng.Bernoulli(0.5);
    r[i] = {i, rng.Normal() + (m ? 0.5 : 0.0), m};
  }
  const double cv = CrossValidatedAccuracy(r, 2, RngSeed{8});
  const double in_sample = BestThresholdAccuracy(r).accuracy;
  EXPECT_LT(cv, in_sample + 0.02);
  EXPECT_GT(cv, in_sample - 0.05);
}

TEST(CrossValidatedAccuracyTest, ChanceLevelWithoutSignal) {
  // Pure-noise scores on an exact 50/50 split: the estimate is centred on 0.5.
  Rng rng(RngSeed{11});
  double sum = 0.0;
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    std::vector<ScoreRecord> r(100);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = {i, rng.Normal(), i < 50};
    sum += CrossValidatedAccuracy(r, 2, RngSeed{static_cast<std::uint64_t>(t)});
  }
  // Per-trial sd is about 0.05, so the mean has SE about 0.0025.
  EXPECT_NEAR(sum / trials, 0.5, 0.01);
}

TEST(ZeroOneTest, FormulaExample) {
  EXPECT_NEAR(ZeroOneAccuracyFormula(0.5, 0.979, 0.938), 0.5205, 1e-12);
  for (double lambda : {0.1, 0.5, 0.9}) EXPECT_EQ(ZeroOneAccuracyFormula(lambda, 1.0, 0.0), 1.0);
  EXPECT_THROW(ZeroOneAccuracyFormula(1.5, 0.5, 0.5), DomainError);
  EXPECT_THROW(ZeroOneAccuracyFormula(0.5, -0.1, 0.5), DomainError);
}

TEST(ZeroOneTest, CountingIdentity) {
  // Score 1 for a correct prediction, 0 otherwise.
  Rng rng(RngSeed{9});
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.UniformInt(50);
    std::vector<ScoreRecord> r(n);
    double members = 0, member_correct = 0, held = 0, held_correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = {i, rng.Bernoulli(0.8) ? 1.0 : 0.0, rng.Bernoulli(0.5)};
      (r[i].truth ? members : held) += 1;
      (r[i].truth ? member_correct : held_correct) += r[i].score;
    }
    const double lambda_hat = members / static_cast<double>(n);
    const double p_train = members > 0 ? member_correct / members : 0.0;
    const double p_test = held > 0 ? held_correct / held : 0.0;
    EXPECT_NEAR(ZeroOneAttackAccuracy(r), ZeroOneAccuracyFormula(lambda_hat, p_train, p_test),
                1e-12);
  }
  EXPECT_THROW(ZeroOneAttackAccuracy({}), EvaluationError);
}

TEST(BoundsTest, DifferentialPrivacy) {
  EXPECT_DOUBLE_EQ(DpMembershipBound(0.01, 0.5), 0.5025);
  EXPECT_EQ(DpMembershipBound(1e6, 0.5), 1.0);
  for (double lambda : {0.0, 0.1, 0.5, 0.99}) EXPECT_EQ(DpMembershipBound(0.0, lambda), lambda);
  EXPECT_THROW(DpMembershipBound(-1.0, 0.5), DomainError);
}

TEST(BoundsTest, MembershipPrivacy) {
  EXPECT_EQ(MembershipPrivacyBound(0.3, 1.0, 1.0, 0.5), 1.0);
  for (double lambda : {0.1, 0.5, 0.9}) {
    for (double t : {0.5, 1.0, 4.0}) EXPECT_EQ(MembershipPrivacyBound(0.0, 0.0, t, lambda), lambda);
  }
  const double a = MembershipPrivacyBound(0.4, 0.0, 1.0, 0.2) - 0.2;
  const double b = MembershipPrivacyBound(0.4, 0.0, 2.0, 0.2) - 0.2;
  EXPECT_NEAR(b, a / 2.0, 1e-15);
  EXPECT_THROW(MembershipPrivacyBound(0.1, 0.0, 0.0, 0.5), DomainError);
  EXPECT_THROW(MembershipPrivacyBound(0.1, 1.5, 1.0, 0.5), DomainError);
}

TEST(SigmoidLipschitzTest, Sweep) {
  EXPECT_TRUE(SigmoidLipschitzCheck(0.3, 0.3));
  EXPECT_TRUE(SigmoidLipschitzCheck(-5.0, 2.0));
  Rng rng(RngSeed{10});
  for (int i = 0; i < 100000; ++i) {
    const double u = 20.0 * (rng.Uniform() - 0.5);
    const double v = u + rng.Normal();
    ASSERT_TRUE(SigmoidLipschitzCheck(u, v)) << u << ' ' << v;
  }
  // Near zero the constant 1/4 is tight: a larger slope would fail.
  EXPECT_GT(Sigmoid(1e-3) - Sigmoid(0.0), 0.249 * 1e-3);
}

TEST(EvaluateTest, ReportAndJson) {
  const auto r = Records({{0.1, false}, {0.2, false}, {0.8, true}, {0.9, true}});
  const auto report = Evaluate(r, "malt", 42);
  EXPECT_EQ(report.attack, "malt");
  EXPECT_EQ(report.accuracy, 1.0);
  EXPECT_EQ(report.map_train, 1.0);
  EXPECT_EQ(report.map_test, 1.0);
  EXPECT_EQ(report.n, 4u);
  EXPECT_EQ(report.member_fraction, 0.5);
  const auto j = ToJson(report);
  EXPECT_EQ(j.at("seed"), 42);
  EXPECT_EQ(j.at("calibrated_on_evaluated"), false);

  const auto flat = Evaluate(Records({{1, true}, {1, false}, {1, false}}), "x", 0);
  EXPECT_EQ(ToJson(flat).at("threshold"), "inf");
}

TEST(AggregateTest, MeanAndStandardError) {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const auto m = MeanStdErr(v);
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_DOUBLE_EQ(m.se, std::sqrt(5.0 / 3.0 / 4.0));
  EXPECT_EQ(MeanStdErr(std::vector<double>{7.0}).se, 0.0);

  std::vector<AttackReport> reports(2);
  reports[0] = {.attack = "malt", .accuracy = 0.5, .map_train = 0.4};
  reports[1] = {.attack = "malt", .accuracy = 0.7, .map_train = 0.6};
  const auto agg = Aggregate(reports);
  EXPECT_EQ(agg.repeats, 2u);
  EXPECT_DOUBLE_EQ(agg.accuracy.mean, 0.6);
  EXPECT_DOUBLE_EQ(agg.accuracy.se, 0.1);
  reports[1].attack = "mast";
  EXPECT_THROW(Aggregate(reports), EvaluationError);
}

}  // namespace
}  // namespace mia
