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

#include "mia/attacks.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "mia/config.hpp"
#include "mia/experiment.hpp"
#include "mia/shadow.hpp"

namespace mia {
namespace {

Sample MakeSample(std::initializer_list<double> x, int label = 0) {
  Sample s;
  s.features = Eigen::Map<const Vector>(x.begin(), static_cast<Eigen::Index>(x.size()));
  s.label = label;
  return s;
}

ModelParams Logreg(std::initializer_list<double> theta) {
  return ModelParams{ModelKind::kLogisticRegression, MakeSample(theta).features, 1.0, 1.0};
}

ModelParams Gaussian(const Vector& theta, double temperature = 1.0) {
  return ModelParams{ModelKind::kGaussianMean, theta, temperature, 0.0};
}

TEST(ZeroOneScoreTest, CorrectAndIncorrect) {
  const auto p = Logreg({5.0, 0.0});
  EXPECT_EQ(ZeroOneScore(p, MakeSample({1.0, 0.3}, 1)), 1.0);
  EXPECT_EQ(ZeroOneScore(p, MakeSample({1.0, 0.3}, 0)), 0.0);
  EXPECT_THROW(ZeroOneScore(Gaussian(Vector::Zero(2)), MakeSample({1, 1})), ModelError);
}

TEST(ZeroOneScoreTest, MemberMeanIsTrainAccuracy) {
  const auto data = GenTwoClassFeatures(200, 10, 2.0, RngSeed{3});
  const auto split = DrawExactSplit(200, 0.5, RngSeed{4});
  const auto p = TrainLogreg(data, split, {.l2 = 1.0});
  double score_sum = 0.0;
  int correct = 0;
  for (std::size_t i : split.members()) {
    score_sum += ZeroOneScore(p, data[i]);
    const double margin = p.theta.dot(data[i].features);
    correct += (margin > 0.0 ? 1 : 0) == data[i].label;
  }
  EXPECT_EQ(score_sum, static_cast<double>(correct));
}

TEST(MaltScoreTest, ZeroLossIsMaximal) {
  const Vector theta = Vector::Constant(3, 0.25);
  EXPECT_EQ(MaltScore(Gaussian(theta), Sample{theta, 0}), 0.0);
}

TEST(MaltScoreTest, ClassifierScoreIsLogProbability) {
  Rng rng(RngSeed{2});
  for (int k = 0; k < 50; ++k) {
    const auto p = Logreg({rng.Normal(), rng.Normal()});
    const Sample z = MakeSample({2 * rng.Normal(), 2 * rng.Normal()}, static_cast<int>(rng.UniformInt(2)));
    const double m = p.theta.dot(z.features);
    const double p1 = 1.0 / (1.0 + std::exp(-m));
    const double expected = std::log(z.label == 1 ? p1 : 1.0 - p1);
    EXPECT_NEAR(MaltScore(p, z), expected, 1e-12);
    EXPECT_LE(MaltScore(p, z), 0.0);
  }
}

TEST(MaltScoreTest, OrderingReversesLosses) {
  const auto data = GenGaussianDataset(50, 4, Vector::Zero(4), RngSeed{1});
  const auto p = Gaussian(Vector::Constant(4, 0.1));
  for (std::size_t i = 0; i + 1 < data.size(); ++i) {
    const bool loss_less = GaussianLoss(p, data[i]) < GaussianLoss(p, data[i + 1]);
    EXPECT_EQ(loss_less, MaltScore(p, data[i]) > MaltScore(p, data[i + 1]));
  }
}

TEST(MastScoreTest, LossEqualToTauGivesPriorPosterior) {
  const auto p = Gaussian(Vector::Zero(2));
  const Sample z = MakeSample({1.0, 2.0});
  const double tau = GaussianLoss(p, z);
  EXPECT_EQ(MastScore(p, z, tau), 0.0);
  for (double lambda : {0.1, 0.5, 0.73}) {
    EXPECT_NEAR(MembershipPosterior(MastScore(p, z, tau), lambda), lambda, 1e-15);
  }
  EXPECT_EQ(MastScore(p, z, 0.0), MaltScore(p, z));
}

TEST(MastScoreTest, MissingTauIsCalibrationError) {
  const auto p = Gaussian(Vector::Zero(1));
  const auto tau = TauEstimate::PerSample({0.5, 0.7});
  EXPECT_NO_THROW(MastScore(p, MakeSample({1.0}), tau, 1));
  EXPECT_THROW(MastScore(p, MakeSample({1.0}), tau, 2), CalibrationError);
  EXPECT_THROW(MastScore(p, MakeSample({1.0}), TauEstimate{}, 0), CalibrationError);
}

TEST(GaussianTauTest, ClosedCases) {
  const Vector mu = Vector::Constant(3, 1.5);
  EXPECT_EQ(GaussianTauClosedForm(Sample{mu, 0}, mu, 7), 0.0);
  EXPECT_THROW(GaussianTauClosedForm(MakeSample({1.0}), mu, 7), ModelError);
  EXPECT_THROW(GaussianTauClosedForm(Sample{mu, 0}, mu, 0), ModelError);
}

TEST(GaussianTauTest, ExpectationOverSamples) {
  // z ~ N(mu, I), d = 4, n' = 3: E tau = 3*4/8 = 1.5. sd of tau is
  // (3/8) sqrt(2*4) = 1.06, so the mean of 1e5 draws has SE 0.0034.
  const Eigen::Index d = 4;
  const std::size_t n_prime = 3;
  const Vector mu = Vector::Constant(d, -2.0);
  const auto data = GenGaussianDataset(100000, d, mu, RngSeed{12});
  double total = 0.0;
  for (const auto& z : data) total += GaussianTauClosedForm(z, mu, n_prime);
  EXPECT_NEAR(total / 1e5, GaussianGlobalTau(d, n_prime), 0.02);
  EXPECT_EQ(GaussianGlobalTau(d, n_prime), 1.5);
}

TEST(GaussianTauTest, MatchesMonteCarloUpToConstant) {
  // −log E exp(−½‖z − t‖²) for t ~ N(mu, I/n') equals the closed form plus
  // (d/2) log((n'+1)/n').
  const Eigen::Index d = 3;
  const std::size_t n_prime = 10;
  const Vector mu = Vector::Constant(d, 0.5);
  GaussianPosteriorSampler sampler(mu, n_prime, RngSeed{99});
  std::vector<Vector> draws(200000);
  for (auto& t : draws) t = sampler.Next();
  const auto zs = GenGaussianDataset(10, d, mu, RngSeed{5});
  std::vector<double> losses(draws.size());
  for (const auto& z : zs) {
    for (std::size_t k = 0; k < draws.size(); ++k) losses[k] = GaussianLossAt(draws[k], z);
    const double mc = MonteCarloTauFromLosses(losses, 1.0).tau;
    EXPECT_NEAR(mc - GaussianTauClosedForm(z, mu, n_prime), GaussianTauConstant(d, n_prime), 0.01);
  }
}

TEST(GaussianOptimalScoreTest, Basics) {
  const Vector mu = Vector::Constant(2, 1.0);
  EXPECT_EQ(GaussianOptimalScore(Gaussian(mu), Sample{mu, 0}, mu, 5), 0.0);
  EXPECT_DOUBLE_EQ(MembershipPosterior(0.0, 0.5), 0.5);

  const Sample z = MakeSample({3.0, -1.0});
  double previous = std::numeric_limits<double>::infinity();
  for (double shift : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    const auto p = Gaussian(z.features + Vector::Constant(2, shift));
    const double s = GaussianOptimalScore(p, z, mu, 5);
    EXPECT_LT(s, previous);
    previous = s;
  }
  EXPECT_THROW(GaussianOptimalScore(Gaussian(mu, 2.0), z, mu, 5), ModelError);
  EXPECT_THROW(GaussianOptimalScore(Logreg({1, 1}), z, mu, 5), ModelError);
}

TEST(MattScoreTest, ZeroCases) {
  const auto p = Logreg({0.3, -0.2});
  const Sample z = MakeSample({1.0, 2.0}, 1);
  EXPECT_EQ(MattScore(p, p, z), 0.0);
  // Gaussian reference sitting on z has zero gradient there.
  const auto ref = Gaussian(z.features);
  EXPECT_EQ(MattScore(Gaussian(Vector::Constant(2, 9.0)), ref, z), 0.0);
  EXPECT_THROW(MattScore(p, Gaussian(Vector::Zero(2)), z), ModelError);
}

TEST(MattScoreTest, SingleGradientStep) {
  Rng rng(RngSeed{31});
  for (int k = 0; k < 20; ++k) {
    const auto ref = Logreg({rng.Normal(), rng.Normal(), rng.Normal()});
    const Sample z = MakeSample({rng.Normal(), rng.Normal(), rng.Normal()}, static_cast<int>(rng.UniformInt(2)));
    const double eta = 0.1 + rng.Uniform();
    const Vector g = SampleLossGradient(ref, z);
    ModelParams stepped = ref;
    stepped.theta -= eta * g;
    EXPECT_NEAR(MattScore(stepped, ref, z), eta * g.squaredNorm(), 1e-12 * (1 + g.squaredNorm()));
    EXPECT_GT(MattScore(stepped, ref, z), 0.0);
  }
}

TEST(MattFullScoreTest, CorrectionIsNonPositive) {
  Rng rng(RngSeed{8});
  for (int k = 0; k < 50; ++k) {
    Matrix a(4, 4);
    for (int i = 0; i < 16; ++i) a.data()[i] = rng.Normal();
    const Matrix h = a * a.transpose() + 0.1 * Matrix::Identity(4, 4);
    const HessianInverse hinv(h);
    const Vector v = Vector::NullaryExpr(4, [&] { return rng.Normal(); });
    EXPECT_LT((hinv.Apply(v) - h.inverse() * v).norm(), 1e-8 * (1 + (h.inverse() * v).norm()));

    const auto ref = ModelParams{ModelKind::kLogisticRegression, Vector::NullaryExpr(4, [&] { return rng.Normal(); }), 1.0, 1.0};
    auto target = ref;
    target.theta += 0.1 * Vector::NullaryExpr(4, [&] { return rng.Normal(); });
    const Sample z{Vector::NullaryExpr(4, [&] { return rng.Normal(); }), static_cast<int>(rng.UniformInt(2))};
    const auto terms = MattFullTerms(target, ref, z, hinv);
    EXPECT_LE(terms.correction, 0.0);
    EXPECT_EQ(terms.first_order, MattScore(target, ref, z));
    EXPECT_EQ(MattFullScore(target, ref, z, hinv), terms.total());
  }
}

TEST(MattFullScoreTest, ZeroGradientAndSingularHessian) {
  const Sample z = MakeSample({1.0, 1.0});
  const auto ref = Gaussian(z.features);
  const HessianInverse hinv(Matrix::Identity(2, 2));
  EXPECT_EQ(MattFullScore(Gaussian(Vector::Zero(2)), ref, z, hinv), 0.0);
  Matrix singular(2, 2);
  singular << 1, 1, 1, 1;
  EXPECT_THROW(HessianInverse{singular}, NumericalError);
}

// Per-repeat mean MATT score over members and over held-out samples. Scores
// within one repeat share θ − θ₀*, so repeats are the independent units.
struct MattMeans {
  std::vector<double> member, held;
};

MattMeans MattMeansOverRepeats(std::size_t n, std::size_t repeats) {
  ExperimentConfig config;
  config.model = ModelKind::kLogisticRegression;
  config.data = {DataSource::kTwoClass, n, 20, {}, 3.5, ""};
  config.calibration_fraction = 0.5;
  config.attacks = {AttackKind::kMatt};
  MattMeans out;
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto rep = RunRepeat(config, r);
    double ms = 0.0, hs = 0.0;
    int m = 0, h = 0;
    for (const auto& rec : rep.outcomes[0].records) {
      (rec.truth ? ms : hs) += rec.score;
      ++(rec.truth ? m : h);
    }
    out.member.push_back(ms / m);
    out.held.push_back(hs / h);
  }
  return out;
}

double Mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double StandardError(const std::vector<double>& v) {
  const double m = Mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

TEST(MattScoreTest, MembersScoreAboveHeldOut) {
  const auto small = MattMeansOverRepeats(400, 30);
  std::vector<double> gap(small.member.size());
  for (std::size_t r = 0; r < gap.size(); ++r) gap[r] = small.member[r] - small.held[r];
  EXPECT_GT(Mean(small.member), 3.0 * StandardError(small.member));
  EXPECT_GT(Mean(gap), 3.0 * StandardError(gap));

  // The held-out mean is not exactly zero: θ₀* has its own O(1/√n) error,
  // which biases held-out scores upward by O(d/n). It vanishes as n grows.
  const auto large = MattMeansOverRepeats(4000, 30);
  EXPECT_LT(Mean(large.held), 0.25 * Mean(small.held));
  EXPECT_GT(Mean(large.member) - Mean(large.held), 0.0);
}

TEST(TemperatureTest, ThresholdDecisionsInvariantToScale) {
  const auto data = GenGaussianDataset(60, 5, Vector::Zero(5), RngSeed{4});
  const auto split = DrawExactSplit(60, 0.5, RngSeed{5});
  const auto p = TrainGaussianMean(data, split);
  std::vector<ScoreRecord> base;
  for (std::size_t i = 0; i < data.size(); ++i) base.push_back({i, MaltScore(p, data[i]), split.is_member(i) != 0});
  const double reference = BestThresholdAccuracy(base).accuracy;
  for (double temperature : {0.1, 0.5, 2.0, 10.0}) {
    auto scaled = base;
    for (auto& r : scaled) r.score /= temperature;
    EXPECT_EQ(BestThresholdAccuracy(scaled).accuracy, reference);
  }
}

TEST(AttackNameTest, RoundTrip) {
  for (auto k : {AttackKind::kZeroOne, AttackKind::kMalt, AttackKind::kMast, AttackKind::kMastClosedForm,
                 AttackKind::kMatt, AttackKind::kMattFull, AttackKind::kOptimal}) {
    EXPECT_EQ(ParseAttack(AttackName(k)), k);
  }
  EXPECT_THROW(ParseAttack("shokri"), ConfigError);
}

}  // namespace
}  // namespace mia
