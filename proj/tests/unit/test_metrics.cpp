#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "aggdiff/errors.hpp"
#include "aggdiff/metrics.hpp"
#include "aggdiff/presets.hpp"

using namespace aggdiff;

namespace {

DensityTrajectory gaussian_run(const ModelSpec& model) {
  const Grid g = Grid::make_1d(3.0, 0.05, 2e-3, 0.04);
  SolverConfig sc;
  sc.grid = g;
  sc.stepping = SolverConfig::Stepping::adaptive;
  const auto rho0 = initial_slice(
      {{"kind", "gaussian_mixture"}, {"components", {{{"mean", 0.0}, {"sd", 0.5}, {"weight", 1.0}}}}}, g);
  return solve(model, rho0, sc);
}

std::vector<double> top_hat(const Grid& g, double centre) {
  std::vector<double> v(g.nodes_per_slice(), 0.0);
  v[g.flat(g.index_of(centre))] = 1.0 / g.step();
  return v;
}

std::vector<double> normal(const Grid& g, double mean) {
  std::vector<double> v(g.nodes_per_slice(), 0.0);
  for (int m = -g.active_half_count(); m <= g.active_half_count(); ++m) {
    const double z = (g.x(m) - mean);
    v[g.flat(m)] = std::exp(-0.5 * z * z) / std::sqrt(2 * std::numbers::pi);
  }
  return v;
}

}  // namespace

TEST(ReconstructionError, Values) {
  const Eigen::Vector2d c(5.0, 5.0);
  EXPECT_EQ(reconstruction_error(c, c), 0.0);
  EXPECT_EQ(reconstruction_error(c, Eigen::Vector2d::Zero()), 1.0);
  EXPECT_NEAR(reconstruction_error(c, Eigen::Vector2d(4.69, 5.63)), 0.0993, 5e-5);
  EXPECT_THROW(reconstruction_error(Eigen::Vector2d::Zero(), c), InvalidParameter);
  EXPECT_THROW(reconstruction_error(c, Eigen::Vector3d::Zero()), InvalidParameter);
}

TEST(ErrorFunctional, ZeroForEqualForces) {
  const ModelSpec model = preset("example3").model;
  const DensityTrajectory t = gaussian_run(model);
  const RadialKernel W = model.interaction_kernel();
  EXPECT_EQ(error_functional(W, W, t), 0.0);
  const RadialKernel shifted(W.form(), W.terms(), W.potential_offset() + 3.0);
  EXPECT_NEAR(error_functional(shifted, W, t), 0.0, 1e-14);
}

TEST(ErrorFunctional, QuadraticInScaling) {
  const ModelSpec model = preset("example3").model;
  const DensityTrajectory t = gaussian_run(model);
  const RadialKernel W = model.interaction_kernel();
  const double e1 = error_functional(W.scaled(1.1), W, t);
  const double e2 = error_functional(W.scaled(1.2), W, t);
  const double e3 = error_functional(W.scaled(1.3), W, t);
  ASSERT_GT(e1, 0.0);
  EXPECT_NEAR(e2 / e1, 4.0, 1e-9);
  EXPECT_NEAR(e3 / e1, 9.0, 1e-9);
}

TEST(Wasserstein, IdenticalDensities) {
  const Grid g = Grid::make_1d(5.0, 0.05, 0.1, 0.1);
  const auto a = normal(g, 0.3);
  EXPECT_EQ(wasserstein2_1d(a, a, g), 0.0);
}

TEST(Wasserstein, NarrowTopHatsTranslate) {
  const Grid g = Grid::make_1d(3.0, 0.05, 0.1, 0.1);
  const double d = wasserstein2_1d(top_hat(g, -0.5), top_hat(g, 1.0), g);
  EXPECT_NEAR(d, 1.5, g.step());
}

TEST(Wasserstein, ShiftedNormal) {
  const Grid g = Grid::make_1d(8.0, 0.01, 0.1, 0.1);
  const double d = wasserstein2_1d(normal(g, 0.0), normal(g, 0.4), g, 20000);
  EXPECT_NEAR(d, 0.4, 0.004);
}

TEST(Wasserstein, RejectsMassMismatch) {
  const Grid g = Grid::make_1d(3.0, 0.05, 0.1, 0.1);
  auto a = normal(g, 0.0), b = a;
  for (double& v : b) v *= 2.0;
  EXPECT_THROW(wasserstein2_1d(a, b, g), InvalidInput);
}

TEST(Spearman, Ranks) {
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {10, 20, 30, 45}), 1.0);
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0);
  EXPECT_NEAR(spearman({1, 2, 3}, {1, 1, 2}), std::sqrt(3.0) / 2.0, 1e-12);
}

TEST(StabilitySweep, ScalingFamilyIsMonotone) {
  const ModelSpec model = preset("example3").model;
  const Grid g = Grid::make_1d(3.0, 0.05, 2e-3, 0.2);
  SolverConfig sc;
  sc.grid = g;
  sc.stepping = SolverConfig::Stepping::adaptive;
  const auto rho0 = initial_slice(
      {{"kind", "gaussian_mixture"}, {"components", {{{"mean", 0.3}, {"sd", 0.4}, {"weight", 1.0}}}}}, g);
  const StabilitySweep s = stability_sweep(model, rho0, sc, {0.02, 0.05, 0.1});
  ASSERT_EQ(s.probes.size(), 3u);
  EXPECT_TRUE(s.monotone);
  EXPECT_TRUE(s.rank_consistent);
  for (const auto& p : s.probes) EXPECT_EQ(p.initial_d2_squared, 0.0);
}
