#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "envdt/stochastic.hpp"

using namespace envdt;

namespace {

constexpr int kMomentDraws = 1'000'000;

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
  double fourth = 0.0;
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  for (double x : xs) {
    double d = x - m.mean;
    m.variance += d * d;
    m.fourth += d * d * d * d;
  }
  m.variance /= static_cast<double>(xs.size() - 1);
  m.fourth /= static_cast<double>(xs.size());
  return m;
}

std::vector<double> draw(const DistributionSpec& spec, std::uint64_t seed, int n) {
  RandomStream stream(seed);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(sample(spec, stream));
  return out;
}

}  // namespace

TEST(Philox, KnownAnswerVectors) {
  using Block = std::array<std::uint32_t, 4>;
  EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}), (Block{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (Block{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (Block{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(RandomStream, SameSeedSameSequence) {
  RandomStream a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    double x = a.next_uniform();
    EXPECT_EQ(x, b.next_uniform());
    differs |= x != c.next_uniform();
  }
  EXPECT_TRUE(differs);
}

TEST(RandomStream, BlockIsPureFunctionOfPosition) {
  RandomStream s(9);
  auto first = s.next_block();
  for (int i = 0; i < 5; ++i) first.next();
  auto second = s.next_block();
  UniformBlock again({0, 0}, 0);
  RandomStream t(9);
  t.next_block();
  again = t.next_block();
  for (int i = 0; i < 8; ++i) EXPECT_EQ(second.next(), again.next());
}

TEST(RandomStream, SplitStreamsAreUncorrelated) {
  RandomStream root(2024);
  RandomStream a = root.split("BatteryStateMachine");
  RandomStream b = root.split("DeviceStateMachine");
  constexpr int n = 200'000;
  double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
  for (int i = 0; i < n; ++i) {
    double x = a.next_uniform(), y = b.next_uniform();
    sa += x, sb += y, sab += x * y, saa += x * x, sbb += y * y;
  }
  double cov = sab / n - (sa / n) * (sb / n);
  double r = cov / std::sqrt((saa / n - (sa / n) * (sa / n)) * (sbb / n - (sb / n) * (sb / n)));
  EXPECT_LT(std::abs(r), 5.0 / std::sqrt(n));
  EXPECT_EQ(root.position(), 0u);
}

TEST(Distribution, ParameterDomainsEnforced) {
  EXPECT_THROW(check_parameters(NormalDist{0.5, 0.0}), InvalidParameters);
  EXPECT_THROW(check_parameters(BinomialDist{0, 0.5}), InvalidParameters);
  EXPECT_THROW(check_parameters(BinomialDist{10, 1.5}), InvalidParameters);
  EXPECT_THROW(check_parameters(BernoulliDist{-0.1}), InvalidParameters);
  EXPECT_THROW(check_parameters(ExponentialDist{0.0}), InvalidParameters);
  EXPECT_THROW(check_parameters(GammaDist{0.0, 1.0}), InvalidParameters);
  EXPECT_THROW(check_parameters(GammaDist{1.0, 0.0}), InvalidParameters);
  EXPECT_THROW(check_parameters(PoissonDist{-1.0}), InvalidParameters);
  EXPECT_THROW(check_parameters(TriangularDist{0.0, 1.5, 1.0}), InvalidParameters);
  EXPECT_THROW(check_parameters(LogarithmicDist{0.0}), InvalidParameters);
  EXPECT_THROW(check_parameters(LogarithmicDist{1.0}), InvalidParameters);
  for (auto k : kAllDistributionKinds) EXPECT_NO_THROW(check_parameters(default_spec(k)));
}

TEST(Distribution, DefaultsArePinned) {
  EXPECT_EQ(default_spec(DistributionKind::Normal), DistributionSpec(NormalDist{0.5, 0.15}));
  EXPECT_EQ(default_spec(DistributionKind::Binomial), DistributionSpec(BinomialDist{10, 0.5}));
  EXPECT_EQ(default_spec(DistributionKind::Bernoulli), DistributionSpec(BernoulliDist{0.5}));
  EXPECT_EQ(default_spec(DistributionKind::Exponential), DistributionSpec(ExponentialDist{2.0}));
  EXPECT_EQ(default_spec(DistributionKind::Gamma), DistributionSpec(GammaDist{2.0, 0.25}));
  EXPECT_EQ(default_spec(DistributionKind::Poisson), DistributionSpec(PoissonDist{3.0}));
  EXPECT_EQ(default_spec(DistributionKind::Uniform), DistributionSpec(UniformDist{0.0, 1.0}));
  EXPECT_EQ(default_spec(DistributionKind::Geometric), DistributionSpec(GeometricDist{0.5}));
  EXPECT_EQ(default_spec(DistributionKind::Triangular), DistributionSpec(TriangularDist{0.0, 0.5, 1.0}));
  EXPECT_EQ(default_spec(DistributionKind::Logarithmic), DistributionSpec(LogarithmicDist{0.5}));
}

TEST(Distribution, TextFormRoundTrips) {
  for (auto k : kAllDistributionKinds) {
    auto spec = default_spec(k);
    EXPECT_EQ(kind_of(spec), k);
    EXPECT_EQ(parse_distribution(format_distribution(spec)), spec);
    EXPECT_EQ(parse_distribution(to_string(k)), spec);
  }
  EXPECT_EQ(parse_distribution("gamma(k=3, theta=0.5)"), DistributionSpec(GammaDist{3.0, 0.5}));
  EXPECT_THROW(parse_distribution("cauchy"), InvalidParameters);
  EXPECT_THROW(parse_distribution("normal(mu=0.5, tau=1)"), InvalidParameters);
  EXPECT_THROW(parse_distribution("bernoulli(p=2)"), InvalidParameters);
}

TEST(Distribution, UniformSupport) {
  RandomStream s(5);
  for (int i = 0; i < 100'000; ++i) {
    double x = sample(UniformDist{}, s);
    ASSERT_GE(x, 0.0);
    ASSERT_LT(x, 1.0);
  }
}

TEST(Distribution, DegenerateBernoulli) {
  RandomStream s(1);
  for (int i = 0; i < 10'000; ++i) ASSERT_EQ(sample(BernoulliDist{1.0}, s), 1.0);
}

TEST(Distribution, ExponentialMean) {
  auto m = moments(draw(ExponentialDist{2.0}, 77, kMomentDraws));
  EXPECT_NEAR(m.mean, 0.5, 0.01);
}

class MomentTest : public ::testing::TestWithParam<DistributionKind> {};

TEST_P(MomentTest, MatchesAnalyticMeanAndVariance) {
  auto spec = default_spec(GetParam());
  auto m = moments(draw(spec, 1000 + static_cast<std::uint64_t>(GetParam()), kMomentDraws));
  double mean = distribution_mean(spec);
  double var = distribution_variance(spec);
  double mean_se = std::sqrt(var / kMomentDraws);
  double var_se = std::sqrt(std::max(m.fourth - m.variance * m.variance, 0.0) / kMomentDraws);
  EXPECT_NEAR(m.mean, mean, 5 * mean_se);
  EXPECT_NEAR(m.variance, var, 5 * var_se + 25 * mean_se * mean_se);
}

TEST_P(MomentTest, NonDefaultParametersToo) {
  DistributionSpec spec;
  switch (GetParam()) {
    case DistributionKind::Normal: spec = NormalDist{-2.0, 3.0}; break;
    case DistributionKind::Binomial: spec = BinomialDist{37, 0.2}; break;
    case DistributionKind::Bernoulli: spec = BernoulliDist{0.9}; break;
    case DistributionKind::Exponential: spec = ExponentialDist{0.3}; break;
    case DistributionKind::Gamma: spec = GammaDist{0.4, 2.0}; break;
    case DistributionKind::Poisson: spec = PoissonDist{42.0}; break;
    case DistributionKind::Uniform: spec = UniformDist{-3.0, 5.0}; break;
    case DistributionKind::Geometric: spec = GeometricDist{0.1}; break;
    case DistributionKind::Triangular: spec = TriangularDist{1.0, 1.5, 4.0}; break;
    case DistributionKind::Logarithmic: spec = LogarithmicDist{0.8}; break;
  }
  auto m = moments(draw(spec, 31337, kMomentDraws));
  double mean = distribution_mean(spec);
  double var = distribution_variance(spec);
  double mean_se = std::sqrt(var / kMomentDraws);
  double var_se = std::sqrt(std::max(m.fourth - m.variance * m.variance, 0.0) / kMomentDraws);
  EXPECT_NEAR(m.mean, mean, 5 * mean_se);
  EXPECT_NEAR(m.variance, var, 5 * var_se + 25 * mean_se * mean_se);
}

INSTANTIATE_TEST_SUITE_P(AllKinds, MomentTest, ::testing::ValuesIn(kAllDistributionKinds),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(UnitMapping, DeclaredTable) {
  EXPECT_EQ(map_to_unit(UniformDist{}, 0.3125), 0.3125);
  EXPECT_EQ(map_to_unit(GeometricDist{}, 1.0), 1.0);
  EXPECT_EQ(map_to_unit(GeometricDist{}, 4.0), 0.25);
  EXPECT_EQ(map_to_unit(LogarithmicDist{}, 2.0), 0.5);
  EXPECT_EQ(map_to_unit(BinomialDist{}, 7.0), 0.7);
  EXPECT_EQ(map_to_unit(PoissonDist{}, 3.0), 0.3);
  EXPECT_EQ(map_to_unit(PoissonDist{}, 14.0), 1.0);
  EXPECT_EQ(map_to_unit(ExponentialDist{}, 2.5), 1.0);
  EXPECT_EQ(map_to_unit(GammaDist{}, 0.75), 0.75);
  EXPECT_EQ(map_to_unit(NormalDist{}, -0.2), 0.0);
  EXPECT_EQ(map_to_unit(NormalDist{}, 1.2), 1.0);
  EXPECT_EQ(map_to_unit(BernoulliDist{}, 1.0), 1.0);
  EXPECT_EQ(map_to_unit(TriangularDist{}, 0.5), 0.5);
  EXPECT_EQ(map_to_unit(UniformDist{}, std::nan("")), 0.0);
}

TEST(UnitMapping, NormalClampFractionMatchesTail) {
  RandomStream s(808);
  const NormalDist spec{};
  int clamped = 0;
  for (int i = 0; i < kMomentDraws; ++i) {
    double x = sample(spec, s);
    if (x < 0.0 || x > 1.0) ++clamped;
  }
  double expected = std::erfc((10.0 / 3.0) / std::sqrt(2.0));
  EXPECT_NEAR(static_cast<double>(clamped) / kMomentDraws, expected, 0.0005);
}

TEST(UnitMapping, AlwaysInUnitIntervalUnderFuzzedParameters) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pos(0.01, 20.0), prob(0.001, 0.999), any(-50.0, 50.0);
  RandomStream s(12);
  for (int i = 0; i < 20'000; ++i) {
    double lo = any(rng), hi = lo + pos(rng), mid = lo + (hi - lo) * prob(rng);
    std::vector<DistributionSpec> specs{
        NormalDist{any(rng), pos(rng)},
        BinomialDist{1 + static_cast<std::int64_t>(pos(rng) * 5), prob(rng)},
        BernoulliDist{prob(rng)},
        ExponentialDist{pos(rng)},
        GammaDist{pos(rng), pos(rng)},
        PoissonDist{pos(rng)},
        UniformDist{lo, hi},
        GeometricDist{prob(rng)},
        TriangularDist{lo, mid, hi},
        LogarithmicDist{prob(rng)},
    };
    for (const auto& spec : specs) {
      double u = unit_likelihood(spec, s);
      ASSERT_GE(u, 0.0) << format_distribution(spec);
      ASSERT_LE(u, 1.0) << format_distribution(spec);
    }
  }
}

TEST(UnitMapping, DiscreteSupports) {
  RandomStream s(3);
  for (int i = 0; i < 50'000; ++i) {
    double g = sample(GeometricDist{}, s);
    ASSERT_GE(g, 1.0);
    ASSERT_EQ(g, std::floor(g));
    double l = sample(LogarithmicDist{}, s);
    ASSERT_GE(l, 1.0);
    ASSERT_EQ(l, std::floor(l));
    double b = sample(BinomialDist{}, s);
    ASSERT_GE(b, 0.0);
    ASSERT_LE(b, 10.0);
  }
}
