#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "advdist/gaussian_model.hpp"
#include "advdist/rng.hpp"

using namespace advdist;

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

PopulationSpec three_attribute(double z2, double z3) {
  return PopulationSpec({AttributeSpec::scalar(1.0), AttributeSpec::scalar(1.0), AttributeSpec::scalar(1.0)},
                        {1.0, z2, z3});
}

}  // namespace

TEST(Separability, UnitMeanIdentityCovariance) {
  EXPECT_DOUBLE_EQ(separability(AttributeSpec(Vector::Constant(1, 1.0), Matrix::Identity(1, 1))), 1.0);
}

TEST(Separability, ZeroMean) {
  EXPECT_EQ(separability(AttributeSpec(Vector::Zero(2), Matrix::Identity(2, 2))), 0.0);
}

TEST(Separability, ScaledVariance) {
  EXPECT_NEAR(separability(AttributeSpec(Vector::Constant(1, 2.0), Matrix::Constant(1, 1, 4.0))), 1.0, 1e-15);
}

TEST(Separability, MatchesExplicitInverse) {
  Vector mu(2);
  mu << 0.7, -1.3;
  const Matrix sigma = mat2(2.0, 0.4, 0.4, 0.5);
  const double expected = mu.dot(sigma.inverse() * mu);
  EXPECT_NEAR(separability(AttributeSpec(mu, sigma)), expected, 1e-12);
}

TEST(AttributeSpec, RejectsNonPositiveDefinite) {
  EXPECT_THROW(AttributeSpec(Vector::Zero(2), mat2(1.0, 2.0, 2.0, 1.0)), std::invalid_argument);
  EXPECT_THROW(AttributeSpec(Vector::Zero(2), mat2(1.0, 0.5, 0.0, 1.0)), std::invalid_argument);
  EXPECT_THROW(AttributeSpec(Vector::Zero(2), Matrix::Identity(3, 3)), std::invalid_argument);
  EXPECT_THROW(AttributeSpec::scalar(1.0, 0.0), std::invalid_argument);
}

TEST(GroupProportion, AlignedMajority) {
  EXPECT_DOUBLE_EQ(group_proportion(PopulationSpec::two_feature(1, 1, 0.95), GroupKey::aligned(1)), 0.95);
}

TEST(GroupProportion, BalancedMisaligned) {
  EXPECT_DOUBLE_EQ(group_proportion(PopulationSpec::two_feature(1, 1, 0.5), GroupKey::misaligned(1)), 0.5);
}

TEST(GroupProportion, ThreeAttributeProduct) {
  EXPECT_NEAR(group_proportion(three_attribute(0.9, 0.8), GroupKey({+1, -1})), 0.18, 1e-15);
}

TEST(GroupProportion, SumsToOne) {
  for (double z2 : {0.5, 0.6, 0.93, 1.0})
    for (double z3 : {0.51, 0.77, 0.99}) {
      const auto spec = three_attribute(z2, z3);
      double total = 0.0;
      for (const auto& g : spec.groups()) total += group_proportion(spec, g);
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(PopulationSpec, RejectsBadZeta) {
  EXPECT_THROW(PopulationSpec::two_feature(1, 1, 1.2), std::invalid_argument);
  EXPECT_THROW(PopulationSpec({AttributeSpec::scalar(1), AttributeSpec::scalar(1)}, {0.9, 0.9}),
               std::invalid_argument);
}

TEST(BalancedVariant, SetsSpuriousZetaToHalf) {
  EXPECT_EQ(balanced_variant(PopulationSpec::two_feature(1, 2, 0.95)).zeta(1), 0.5);
  EXPECT_EQ(balanced_variant(PopulationSpec::two_feature(1, 2, 0.5)).zeta(1), 0.5);
  const auto b = balanced_variant(three_attribute(0.9, 0.99));
  EXPECT_EQ(b.zeta(), (std::vector<double>{1.0, 0.5, 0.5}));
}

TEST(Sample, FullCorrelationIsAlwaysAligned) {
  const Dataset d = sample(PopulationSpec::two_feature(1, 1, 1.0), 10000, 7);
  for (std::size_t i = 0; i < d.size(); ++i) ASSERT_EQ(d.group(i), GroupKey::aligned(1));
}

TEST(Sample, AlignedFrequency) {
  const Dataset d = sample(PopulationSpec::two_feature(1, 1, 0.95), 1000000, 11);
  std::size_t aligned = 0;
  for (auto g : d.group_indices()) aligned += g == 0 ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(aligned) / d.size(), 0.95, 0.001);
}

TEST(Sample, InvariantFeatureMean) {
  const Dataset d = sample(PopulationSpec::two_feature(3, 3, 0.95), 1000000, 12);
  double sum = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) sum += d.label(i) * d.features()(static_cast<Eigen::Index>(i), 0);
  EXPECT_NEAR(sum / d.size(), 3.0, 0.003);
}

TEST(Sample, PerGroupMeansAndLabelBalance) {
  const PopulationSpec spec = PopulationSpec::two_feature(1.5, 0.8, 0.7, 2.0, 0.5);
  const std::size_t n = 1000000;
  const Dataset d = sample(spec, n, 13);
  double sum[2][2] = {};
  double count[2] = {};
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = d.group_indices()[i];
    const int y = d.label(i);
    positives += y > 0 ? 1 : 0;
    const double s = g == 0 ? 1.0 : -1.0;
    sum[g][0] += y * d.features()(static_cast<Eigen::Index>(i), 0);
    sum[g][1] += y * s * d.features()(static_cast<Eigen::Index>(i), 1);
    count[g] += 1;
  }
  EXPECT_NEAR(static_cast<double>(positives) / n, 0.5, 3 * std::sqrt(0.25 / n));
  EXPECT_NEAR(count[0] / n, 0.7, 3 * std::sqrt(0.21 / n));
  for (int g = 0; g < 2; ++g) {
    EXPECT_NEAR(sum[g][0] / count[g], 1.5, 3 * std::sqrt(2.0 / count[g]));
    EXPECT_NEAR(sum[g][1] / count[g], 0.8, 3 * std::sqrt(0.5 / count[g]));
  }
}

TEST(Sample, SameSeedIsBitIdentical) {
  const auto spec = PopulationSpec::two_feature(1, 2, 0.9);
  const Dataset a = sample(spec, 5000, 42);
  const Dataset b = sample(spec, 5000, 42);
  const Dataset c = sample(spec, 5000, 43);
  EXPECT_TRUE(a.features() == b.features());
  EXPECT_EQ(a.labels(), b.labels());
  EXPECT_EQ(a.group_indices(), b.group_indices());
  EXPECT_FALSE(a.features() == c.features());
}

TEST(Sample, PrefixStable) {
  const auto spec = PopulationSpec::two_feature(1, 2, 0.9);
  const Dataset small = sample(spec, 100, 5);
  const Dataset large = sample(spec, 1000, 5);
  EXPECT_TRUE(small.features() == large.features().topRows(100));
}

TEST(Sample, RejectsEmpty) { EXPECT_THROW(sample(PopulationSpec::two_feature(1, 1, 0.9), 0, 1), std::invalid_argument); }

TEST(CounterRng, Reproducible) {
  CounterRng a(9, 3), b(9, 3), c(9, 4);
  for (int k = 0; k < 10; ++k) {
    const auto x = a();
    EXPECT_EQ(x, b());
    EXPECT_NE(x, c());
  }
  EXPECT_EQ(a.draws(), 10u);
  CounterRng u(1, 1);
  for (int k = 0; k < 1000; ++k) {
    const double v = u.uniform();
    ASSERT_GE(v, 0.0);
    ASSERT_LT(v, 1.0);
  }
}

TEST(PopulationJson, RoundTrip) {
  Vector mu(2);
  mu << 0.25, -1.0;
  const PopulationSpec spec({AttributeSpec::scalar(1.5, 2.0), AttributeSpec(mu, mat2(1.0, 0.3, 0.3, 2.0))},
                            {1.0, 0.83});
  const PopulationSpec back = population_from_json(to_json(spec));
  ASSERT_EQ(back.attribute_count(), 2u);
  EXPECT_EQ(back.zeta(), spec.zeta());
  for (std::size_t n = 0; n < 2; ++n) {
    EXPECT_TRUE(back.attribute(n).mu() == spec.attribute(n).mu());
    EXPECT_TRUE(back.attribute(n).sigma() == spec.attribute(n).sigma());
  }
  EXPECT_EQ(to_json(back), to_json(spec));
}

TEST(PopulationJson, FlatSigmaAndErrors) {
  const auto doc = nlohmann::json::parse(R"({"attributes":[{"mu":[1],"sigma":[1]},{"mu":[2,0],"sigma":[1,0,0,1]}],"zeta":[0.9]})");
  const auto spec = population_from_json(doc);
  EXPECT_EQ(spec.total_dim(), 3);
  EXPECT_EQ(spec.zeta(1), 0.9);
  EXPECT_THROW(population_from_json(nlohmann::json::parse(R"({"attributes":[]})")), std::invalid_argument);
  EXPECT_THROW(population_from_json(nlohmann::json::parse(R"({"attributes":[{"mu":[1],"sigma":[1,2]}],"zeta":[1]})")),
               std::invalid_argument);
}
