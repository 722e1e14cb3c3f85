#include <gtest/gtest.h>

#include <cmath>

#include "advdist/gaussian_model.hpp"
#include "advdist/perturbation.hpp"
#include "advdist/rng.hpp"

using namespace advdist;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Dataset one_sample(Eigen::VectorXd z, int y) {
  RowMatrix f(1, z.size());
  f.row(0) = z.transpose();
  return Dataset(f, {static_cast<std::int8_t>(y)}, {0}, 1);
}

}  // namespace

TEST(OptimalDirection, L2Normalizes) {
  const auto d = optimal_direction(LinearClassifier(vec({3, 4})), ThreatModel::L2);
  EXPECT_NEAR(d.delta[0], 0.6, 1e-15);
  EXPECT_NEAR(d.delta[1], 0.8, 1e-15);
}

TEST(OptimalDirection, LinfSign) {
  const auto d = optimal_direction(LinearClassifier(vec({0.3, -2})), ThreatModel::Linf);
  EXPECT_EQ(d.delta, vec({1, -1}));
}

TEST(OptimalDirection, SignOfZeroIsPositive) {
  const auto d = optimal_direction(LinearClassifier(vec({0, 5})), ThreatModel::Linf);
  EXPECT_EQ(d.delta, vec({1, 1}));
}

TEST(OptimalDirection, NormContract) {
  CounterRng rng(3, 0);
  for (int k = 0; k < 200; ++k) {
    Eigen::VectorXd w(5);
    for (int i = 0; i < 5; ++i) w[i] = 10.0 * (rng.uniform() - 0.5);
    const LinearClassifier clf(w);
    const auto l2 = optimal_direction(clf, ThreatModel::L2);
    EXPECT_NEAR(l2.delta.norm(), 1.0, 1e-12);
    const auto linf = optimal_direction(clf, ThreatModel::Linf);
    EXPECT_TRUE((linf.delta.array().abs() == 1.0).all());
    // each is the maximizer of w.d over its unit ball
    EXPECT_NEAR(w.dot(l2.delta), w.norm(), 1e-12);
    EXPECT_NEAR(w.dot(linf.delta), w.lpNorm<1>(), 1e-12);
  }
}

TEST(ScaleBudget, Examples) {
  EXPECT_NEAR(scale_budget(0.01, 2, ThreatModel::L2), 0.0141421356, 1e-10);
  EXPECT_EQ(scale_budget(0.01, 2, ThreatModel::Linf), 0.01);
  EXPECT_EQ(scale_budget(0.0, 7, ThreatModel::L2), 0.0);
  EXPECT_EQ(scale_budget(0.0, 7, ThreatModel::Linf), 0.0);
}

TEST(ParseThreat, Spellings) {
  EXPECT_EQ(parse_threat("l2"), ThreatModel::L2);
  EXPECT_EQ(parse_threat("L_2"), ThreatModel::L2);
  EXPECT_EQ(parse_threat("LINF"), ThreatModel::Linf);
  EXPECT_EQ(parse_threat("l_inf"), ThreatModel::Linf);
  EXPECT_THROW(parse_threat("l1"), std::invalid_argument);
  EXPECT_EQ(to_string(ThreatModel::L2), "l2");
}

TEST(Apply, ZeroBudgetIsIdentity) {
  const Dataset d = sample(PopulationSpec::two_feature(1, 2, 0.9), 500, 1);
  const Dataset p = apply(d, {vec({1, -1}), 0.0, ThreatModel::Linf});
  EXPECT_TRUE(p.features() == d.features());
}

TEST(Apply, SingleSampleArithmetic) {
  const PerturbationDirection dir{vec({1, 1}), 0.1, ThreatModel::Linf};
  const Dataset pos = apply(one_sample(vec({1, 1}), +1), dir);
  EXPECT_DOUBLE_EQ(pos.features()(0, 0), 0.9);
  EXPECT_DOUBLE_EQ(pos.features()(0, 1), 0.9);
  const Dataset neg = apply(one_sample(vec({1, 1}), -1), dir);
  EXPECT_DOUBLE_EQ(neg.features()(0, 0), 1.1);
  EXPECT_DOUBLE_EQ(neg.features()(0, 1), 1.1);
}

TEST(Apply, KeepsLabelsAndGroups) {
  const Dataset d = sample(PopulationSpec::two_feature(1, 2, 0.7), 1000, 2);
  const Dataset p = apply(d, {vec({0.6, 0.8}), 0.5, ThreatModel::L2});
  EXPECT_EQ(p.labels(), d.labels());
  EXPECT_EQ(p.group_indices(), d.group_indices());
}

TEST(Apply, PositiveClassMeanShift) {
  const double eps = 0.1;
  const Eigen::VectorXd delta = vec({1, -1});
  const double mu1 = 1.0, mu2 = 2.0, zeta = 0.8;
  const Dataset p = apply(sample(PopulationSpec::two_feature(mu1, mu2, zeta), 1000000, 3),
                          {delta, eps, ThreatModel::Linf});
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  double count = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p.label(i) > 0) {
      sum += p.features().row(static_cast<Eigen::Index>(i)).transpose();
      count += 1;
    }
  const Eigen::Vector2d mean = sum / count;
  // E[z | y=+1] = [mu1, (2 zeta - 1) mu2]; spurious coordinate variance adds the mixture spread
  const double spread2 = 1.0 + mu2 * mu2 * (1.0 - std::pow(2 * zeta - 1, 2));
  EXPECT_NEAR(mean[0], mu1 - eps * delta[0], 3 * std::sqrt(1.0 / count));
  EXPECT_NEAR(mean[1], (2 * zeta - 1) * mu2 - eps * delta[1], 3 * std::sqrt(spread2 / count));
}

TEST(Fgsm, LinfMatchesAnalyticSignDirection) {
  const Dataset d = sample(PopulationSpec::two_feature(1, 2, 0.9), 2000, 4);
  for (const auto& w : {vec({0.7, -1.2}), vec({0.0, 3.0}), vec({-50.0, 40.0})}) {
    const Dataset f = fgsm_perturb(LinearModel{w}, d, 0.05, ThreatModel::Linf);
    const Dataset a = apply(d, optimal_direction(LinearClassifier(w), ThreatModel::Linf, 0.05));
    EXPECT_TRUE(f.features() == a.features());
  }
}

TEST(Fgsm, ZeroBudgetIsIdentity) {
  const Dataset d = sample(PopulationSpec::two_feature(1, 2, 0.9), 500, 5);
  for (auto t : {ThreatModel::L2, ThreatModel::Linf})
    EXPECT_TRUE(fgsm_perturb(LinearModel{vec({1, 2})}, d, 0.0, t).features() == d.features());
}

TEST(Fgsm, L2DirectionCosine) {
  const Dataset d = sample(PopulationSpec::two_feature(1, 1, 0.9), 2000, 6);
  for (const auto& w : {vec({1e-3, 0.0}), vec({0.3, -0.4}), vec({2.0, 5.0})}) {
    const Dataset f = fgsm_perturb(LinearModel{w}, d, 0.1, ThreatModel::L2);
    const Eigen::VectorXd unit = w / w.norm();
    for (std::size_t i = 0; i < d.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const Eigen::VectorXd step = (f.features().row(r) - d.features().row(r)).transpose();
      if (step.norm() == 0.0) continue;
      const double cosine = step.dot(-d.label(i) * unit) / step.norm();
      ASSERT_GE(cosine, 1.0 - 1e-6);
      ASSERT_LE(step.norm(), 0.1 * (1.0 + 1e-12));
    }
  }
}
