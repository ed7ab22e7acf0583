#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "aggdiff/errors.hpp"
#include "aggdiff/fv_solver.hpp"
#include "aggdiff/presets.hpp"

using namespace aggdiff;

namespace {

std::vector<double> gaussian_slice(const Grid& g, double mean, double sd, double mass = 1.0) {
  return initial_slice({{"kind", "gaussian_mixture"},
                        {"components", {{{"mean", mean}, {"sd", sd}, {"weight", mass}}}}},
                       g);
}

double face_x(const Grid& g, int face) {
  return g.x(face - 1 - g.active_half_count()) + 0.5 * g.step();
}

SolverConfig config_for(const Grid& g, SolverConfig::Stepping s = SolverConfig::Stepping::fixed) {
  SolverConfig c;
  c.grid = g;
  c.stepping = s;
  return c;
}

double moment(const DensityTrajectory& t, int l, int p) {
  const Grid& g = t.grid();
  double s = 0.0;
  for (int m = -g.half_count(); m <= g.half_count(); ++m) s += std::pow(g.x(m), p) * t.at(l, m);
  return s * g.step();
}

}  // namespace

TEST(Velocity, EmptyDensityFeelsOnlyConfinement) {
  const Grid g = Grid::make_1d(2.0, 0.05, 1e-3, 0.01);
  ModelSpec model;
  model.diffusion = DiffusionLaw::power(1.0, 2.0);
  model.confinement = PotentialFn::double_well();
  const std::vector<double> zero(g.nodes_per_slice(), 0.0);
  const VelocityField u = velocity_from_state(zero, model, g);
  ASSERT_EQ(u.ux.size(), static_cast<std::size_t>(u.nx + 1));
  for (int f = 1; f < u.nx; ++f) {
    const double x = face_x(g, f);
    EXPECT_NEAR(u.ux[f], -(x * x * x - x), 0.01) << "face " << f;
  }
}

TEST(Velocity, QuadraticInteractionIsCentreOfMassPull) {
  const Grid g = Grid::make_1d(3.0, 0.02, 1e-3, 0.01);
  ModelSpec model;
  model.interaction = RadialKernel(KernelForm::kernel, {{1.0, RadialAtom{1, 0.0}}}, 0.0);
  std::vector<double> rho = gaussian_slice(g, 0.3, 0.4);
  double mass = 0.0, first = 0.0;
  for (int m = -g.half_count(); m <= g.half_count(); ++m) {
    mass += rho[g.flat(m)] * g.step();
    first += g.x(m) * rho[g.flat(m)] * g.step();
  }
  for (double& v : rho) v /= mass;
  first /= mass;
  const VelocityField u = velocity_from_state(rho, model, g);
  for (int f = 1; f < u.nx; ++f) EXPECT_NEAR(u.ux[f], -(face_x(g, f) - first), 1e-8);
}

TEST(Velocity, StationaryParaboloidIsAtRest) {
  const ExperimentConfig c = preset("example4");
  const Grid g = c.solver_grid();
  const auto rho = initial_slice(c.initial, g);
  const VelocityField u = velocity_from_state(rho, c.model, g);
  const int N = g.active_half_count();
  double worst = 0.0;
  for (int i = 1; i < u.nx; ++i) {
    for (int j = 0; j < u.ny; ++j) {
      // Faces with mass on both sides.
      if (rho[g.flat(i - 1 - N, j - N)] > 0.0 && rho[g.flat(i - N, j - N)] > 0.0) {
        worst = std::max(worst, std::abs(u.ux[static_cast<std::size_t>(i) * u.ny + j]));
      }
    }
  }
  EXPECT_LT(worst, 5.0 * g.step() * g.step());
}

TEST(Cfl, ZeroVelocityIsUnbounded) {
  const Grid g = Grid::make_1d(1.0, 0.1, 0.1, 1.0);
  VelocityField u;
  u.nx = 21;
  u.ux.assign(22, 0.0);
  EXPECT_EQ(cfl_timestep(u, g, 1.0), std::numeric_limits<double>::infinity());
}

TEST(Cfl, UnitSpeedFormula) {
  const Grid g = Grid::make_1d(1.0, 0.1, 0.1, 1.0);
  VelocityField u;
  u.nx = 21;
  u.ux.assign(22, 0.0);
  u.ux[5] = 1.0;
  u.ux[9] = -0.5;
  EXPECT_DOUBLE_EQ(cfl_timestep(u, g, 1.0), 0.05);
  EXPECT_DOUBLE_EQ(cfl_timestep(u, g, 0.5), 0.025);
}

TEST(Cfl, TableStepHoldsAtStart) {
  const ExperimentConfig c = preset("example1");
  const Grid g = c.solver_grid();
  const auto rho = initial_slice(c.initial, g);
  const VelocityField u = velocity_from_state(rho, c.model, g);
  EXPECT_LE(c.dt, cfl_timestep(u, g, 1.0, rho, 1e-10));
}

TEST(Cfl, DiffusiveBound) {
  const Grid g = Grid::make_1d(1.0, 0.1, 0.1, 1.0);
  std::vector<double> rho(g.nodes_per_slice(), 0.0);
  rho[g.flat(0)] = 2.0;
  EXPECT_NEAR(diffusive_timestep(DiffusionLaw::power(0.5, 2.0), rho, g, 1.0), 0.01 / 4.0, 1e-15);
  EXPECT_EQ(diffusive_timestep(DiffusionLaw::none(), rho, g, 1.0),
            std::numeric_limits<double>::infinity());
}

TEST(Solve, NoForcesKeepsDataConstant) {
  const Grid g = Grid::make_1d(2.0, 0.05, 1e-2, 0.2);
  const auto rho0 = gaussian_slice(g, 0.0, 0.3);
  const DensityTrajectory t = solve(ModelSpec{}, rho0, config_for(g));
  for (int l = 0; l < t.time_slices(); ++l) {
    const auto s = t.slice(l);
    for (std::size_t i = 0; i < s.size(); ++i) ASSERT_NEAR(s[i], rho0[i], 1e-14 * rho0[i]);
  }
}

TEST(Solve, HeatEquationVarianceGrowth) {
  const double kappa = 0.5, T = 0.2;
  const Grid g = Grid::make_1d(6.0, 0.02, 1e-4, T);
  ModelSpec model;
  model.diffusion = DiffusionLaw::linear(kappa);
  const auto rho0 = gaussian_slice(g, 0.0, 0.5);
  const DensityTrajectory t = solve(model, rho0, config_for(g, SolverConfig::Stepping::adaptive));
  const int L = t.time_slices() - 1;
  const double v0 = moment(t, 0, 2) / moment(t, 0, 0);
  const double v1 = moment(t, L, 2) / moment(t, L, 0);
  EXPECT_NEAR((v1 - v0) / (2.0 * kappa * T), 1.0, 0.02);
}

TEST(Solve, MassAndPositivityOnAggregation) {
  ExperimentConfig c = preset("example1-desk");
  c.T = 0.05;
  const Grid g = c.solver_grid();
  SolverConfig sc = config_for(g, SolverConfig::Stepping::adaptive);
  SolveStats stats;
  const DensityTrajectory t = solve(c.model, initial_slice(c.initial, g), sc, &stats);
  EXPECT_NEAR(t.mass(0), 4.0, 1e-12);
  EXPECT_LE(t.max_relative_mass_drift(), 1e-10);
  for (double v : t.values()) ASSERT_GE(v, 0.0);
  EXPECT_GT(stats.substeps, 0);
}

TEST(Solve, SnapshotStrideSubsamples) {
  const Grid g = Grid::make_1d(2.0, 0.05, 1e-3, 0.02);
  ModelSpec model;
  model.diffusion = DiffusionLaw::power(0.2, 2.0);
  const auto rho0 = gaussian_slice(g, 0.0, 0.3);
  SolverConfig all = config_for(g);
  SolverConfig every5 = all;
  every5.snapshot_stride = 5;
  const DensityTrajectory a = solve(model, rho0, all);
  const DensityTrajectory b = solve(model, rho0, every5);
  ASSERT_EQ(b.time_slices(), 5);
  for (int l = 0; l < b.time_slices(); ++l) {
    for (int m = -g.half_count(); m <= g.half_count(); ++m) ASSERT_EQ(b.at(l, m), a.at(5 * l, m));
  }
}

TEST(Solve, FixedStepAboveBoundThrows) {
  const Grid g = Grid::make_1d(2.0, 0.02, 1e-2, 0.1);
  ModelSpec model;
  model.diffusion = DiffusionLaw::power(1.0, 2.0);
  EXPECT_THROW(solve(model, gaussian_slice(g, 0.0, 0.3), config_for(g)), PositivityLoss);
}

TEST(Solve, RejectsNegativeInitialData) {
  const Grid g = Grid::make_1d(1.0, 0.1, 1e-3, 0.01);
  std::vector<double> rho(g.nodes_per_slice(), 0.0);
  rho[3] = -1.0;
  EXPECT_THROW(solve(ModelSpec{}, rho, config_for(g)), InvalidInput);
}

TEST(Solve, Deterministic) {
  ExperimentConfig c = preset("example2-desk");
  c.T = 0.02;
  const Grid g = c.solver_grid();
  const auto rho0 = initial_slice(c.initial, g);
  const auto a = solve(c.model, rho0, config_for(g));
  const auto b = solve(c.model, rho0, config_for(g));
  ASSERT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
}
