#include <cmath>

#include <gtest/gtest.h>

#include "aggdiff/data_pipeline.hpp"
#include "aggdiff/errors.hpp"
#include "aggdiff/presets.hpp"

using namespace aggdiff;

namespace {

DensityTrajectory ones(const Grid& g) {
  return DensityTrajectory(g, std::vector<double>(g.nodes_per_slice() * g.time_slices(), 1.0));
}

DensityTrajectory bump_trajectory() {
  const Grid g = Grid::make_1d(3.0, 0.05, 0.01, 0.2);
  std::vector<double> v;
  for (int l = 0; l <= g.steps(); ++l) {
    for (int m = -g.half_count(); m <= g.half_count(); ++m) {
      const double x = g.x(m);
      v.push_back(std::abs(x) < 3.0 ? std::exp(-(x - 0.02 * l) * (x - 0.02 * l)) : 0.0);
    }
  }
  return DensityTrajectory(g, std::move(v));
}

}  // namespace

TEST(Philox, KnownAnswerVectors) {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  EXPECT_EQ(Philox4x32::block(C{0, 0, 0, 0}, K{0, 0}),
            (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(Philox4x32::block(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                              K{0xffffffff, 0xffffffff}),
            (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(Philox4x32::block(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                              K{0xa4093822, 0x299f31d0}),
            (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, NormalDrawStatistics) {
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = philox_normal(42, static_cast<std::uint64_t>(i / 1000),
                                   static_cast<std::uint64_t>(i % 1000));
    sum += z;
    sq += z * z;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  EXPECT_LT(std::abs(mean), 4.0 / std::sqrt(n));
  EXPECT_NEAR(var, 1.0, 0.05);
}

TEST(NoiseSigma, ZeroPercent) { EXPECT_EQ(noise_sigma(bump_trajectory(), 0.0), 0.0); }

TEST(NoiseSigma, ConstantUnitField) {
  const Grid g = Grid::make_1d(0.5, 1.0, 1.0, 1.0);
  ASSERT_EQ(g.nodes(), 3);
  EXPECT_DOUBLE_EQ(noise_sigma(ones(g), 100.0), std::sqrt(3.0));
}

TEST(NoiseSigma, MatchesSecondCodePath) {
  const DensityTrajectory t = bump_trajectory();
  const Grid& g = t.grid();
  long double acc = 0.0L;
  for (int l = 1; l < t.time_slices(); ++l) {
    for (int m = -g.half_count(); m <= g.half_count(); ++m) {
      acc += static_cast<long double>(t.at(l, m)) * t.at(l, m);
    }
  }
  const double ref = 0.03 * std::sqrt(static_cast<double>(acc) * g.step() * g.dt());
  EXPECT_NEAR(noise_sigma(t, 3.0), ref, 1e-12 * ref);
}

TEST(NoiseSigma, RejectsOutOfRange) {
  EXPECT_THROW(noise_sigma(bump_trajectory(), -1.0), InvalidParameter);
  EXPECT_THROW(noise_sigma(bump_trajectory(), 101.0), InvalidParameter);
}

TEST(AddNoise, ZeroPercentIsIdentity) {
  const DensityTrajectory t = bump_trajectory();
  const DensityTrajectory n = add_noise(t, {0.0, 7});
  ASSERT_TRUE(std::equal(t.values().begin(), t.values().end(), n.values().begin()));
}

TEST(AddNoise, SeededAndReproducible) {
  const DensityTrajectory t = bump_trajectory();
  const DensityTrajectory a = add_noise(t, {2.0, 11});
  const DensityTrajectory b = add_noise(t, {2.0, 11});
  const DensityTrajectory c = add_noise(t, {2.0, 12});
  EXPECT_TRUE(a.noisy());
  ASSERT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  EXPECT_FALSE(std::equal(a.values().begin(), a.values().end(), c.values().begin()));
  EXPECT_DOUBLE_EQ(a.provenance().noise_percent, 2.0);
  EXPECT_EQ(a.provenance().seed, 11u);
}

TEST(AddNoise, EmpiricalSpreadMatchesSigma) {
  const DensityTrajectory t = bump_trajectory();
  const DensityTrajectory a = add_noise(t, {5.0, 3});
  const double sigma = a.provenance().noise_sigma;
  double sq = 0.0;
  std::size_t n = 0;
  const Grid& g = t.grid();
  for (int l = 0; l < t.time_slices(); ++l) {
    for (int m = -g.active_half_count(); m <= g.active_half_count(); ++m) {
      const double d = a.at(l, m) - t.at(l, m);
      sq += d * d;
      ++n;
    }
  }
  EXPECT_NEAR(std::sqrt(sq / n), sigma, 0.05 * sigma);
}

TEST(AddNoise, RefusesDoubleNoise) {
  const DensityTrajectory a = add_noise(bump_trajectory(), {1.0, 1});
  EXPECT_THROW(add_noise(a, {1.0, 2}), InvalidInput);
}

TEST(Observe, DownsamplesThenPerturbs) {
  const DensityTrajectory t = bump_trajectory();
  const DensityTrajectory o = observe(t, 2, 5, {0.0, 0});
  EXPECT_EQ(o.grid(), t.grid().coarsened(2, 5));
  EXPECT_EQ(o.time_slices(), 5);
  EXPECT_DOUBLE_EQ(o.at(2, 3), t.at(10, 6));
  const DensityTrajectory n = observe(t, 2, 5, {1.0, 9});
  EXPECT_TRUE(n.noisy());
  EXPECT_DOUBLE_EQ(n.provenance().noise_sigma, noise_sigma(o, 1.0));
}
