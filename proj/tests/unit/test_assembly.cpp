#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "aggdiff/assembly.hpp"
#include "aggdiff/errors.hpp"
#include "aggdiff/fv_solver.hpp"
#include "aggdiff/presets.hpp"
#include "aggdiff/sparse_solvers.hpp"

using namespace aggdiff;

namespace {

DensityTrajectory field_of(const Grid& g, const std::function<double(double, double)>& f) {
  std::vector<double> v;
  for (int l = 0; l <= g.steps(); ++l) {
    for (int m = -g.half_count(); m <= g.half_count(); ++m) v.push_back(f(g.t(l), g.x(m)));
  }
  return DensityTrajectory(g, std::move(v));
}

// A short aggregation-diffusion run on a small mesh.
DensityTrajectory small_run(const ModelSpec& model, double R = 2.0) {
  const Grid g = Grid::make_1d(R, 0.05, 1e-3, 0.03);
  const auto rho0 = initial_slice(
      {{"kind", "gaussian_mixture"},
       {"components",
        {{{"mean", -0.5}, {"sd", 0.3}, {"weight", 0.6}}, {{"mean", 0.6}, {"sd", 0.25}, {"weight", 0.4}}}}},
      g);
  SolverConfig sc;
  sc.grid = g;
  sc.stepping = SolverConfig::Stepping::adaptive;
  return solve(model, rho0, sc);
}

ModelSpec gaussian_model() { return preset("example2").model; }

BasisSet gaussian_basis() {
  return basis_gaussian(linspace_step(0.5, 0.5, 5.0), GaussianForm::scaled_linear);
}

// Naive oracle for A and b straight from the definitions.
void oracle_system(const BasisSet& B, const DensityTrajectory& t, const ModelSpec& model,
                   Eigen::MatrixXd& A, Eigen::VectorXd& b) {
  const Grid& g = t.grid();
  const int M = g.half_count();
  const int n = static_cast<int>(B.size());
  const double h = g.step(), dt = g.dt();
  const int L = g.steps();
  const double T = (L - 1) * dt;
  A = Eigen::MatrixXd::Zero(n, n);
  b = Eigen::VectorXd::Zero(n);
  for (int l = 1; l <= L - 1; ++l) {
    for (int m = -M; m <= M; ++m) {
      std::vector<double> C(n, 0.0), R(n, 0.0);
      for (int k = -M; k <= M; ++k) {
        const double rho = t.at(l, k);
        const double d = g.x(m) - g.x(k);
        for (int i = 0; i < n; ++i) {
          double gx, gy;
          B.element(i).gradient(1, d, 0.0, gx, gy);
          C[i] += gx * rho * h;
          R[i] += B.element(i).potential(std::abs(d)) * rho * h;
        }
      }
      const double rho = t.at(l, m);
      const double hp_next = m < M ? model.diffusion.derivative(t.at(l, m + 1)) : 0.0;
      const double F = rho * ((hp_next - model.diffusion.derivative(rho)) / h +
                              model.confinement.dx(g.x(m)));
      const double drho = (t.at(l + 1, m) - rho) / dt;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) A(i, j) += C[i] * C[j] * rho * h * dt / T;
        b(i) -= (drho * R[i] + C[i] * F) * h * dt / T;
      }
    }
  }
}

}  // namespace

TEST(FdTime, Basics) {
  const Grid g = Grid::make_1d(1.0, 0.25, 0.1, 0.5);
  const Field c = fd_time(field_of(g, [](double, double) { return 3.0; }));
  for (double v : c.values) EXPECT_EQ(v, 0.0);
  const Field lin = fd_time(field_of(g, [](double t, double) { return t; }));
  for (double v : lin.values) EXPECT_NEAR(v, 1.0, 1e-12);
  const Field sq = fd_time(field_of(g, [](double t, double) { return t * t; }));
  EXPECT_NEAR(sq.at(3, 0), 0.7, 1e-12);
  EXPECT_EQ(sq.slices, g.steps());
}

TEST(FdSpace, BoundaryClosureAndSlope) {
  const Grid g = Grid::make_1d(1.0, 0.25, 0.1, 0.2);
  const Field c = fd_space(field_of(g, [](double, double) { return 2.0; }));
  const int M = g.half_count();
  for (int m = -M; m < M; ++m) EXPECT_EQ(c.at(1, g.flat(m)), 0.0);
  EXPECT_DOUBLE_EQ(c.at(1, g.flat(M)), -2.0 / 0.25);
  const Field s = fd_space(field_of(g, [](double, double x) { return 2.0 * x + 1.0; }));
  for (int m = -M; m < M; ++m) EXPECT_NEAR(s.at(0, g.flat(m)), 2.0, 1e-12);
}

TEST(FdSpace, RandomFieldMatchesLoop) {
  const Grid g = Grid::make_1d(1.0, 0.1, 0.1, 0.3);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const DensityTrajectory t = field_of(g, [&](double, double) { return U(rng); });
  const Field f = fd_space(t);
  const int M = g.half_count();
  for (int l = 0; l <= g.steps(); ++l) {
    for (int m = -M; m <= M; ++m) {
      const double next = m < M ? t.at(l, m + 1) : 0.0;
      EXPECT_EQ(f.at(l, g.flat(m)), (next - t.at(l, m)) / g.step());
    }
  }
}

TEST(ConvR, PointMassReproducesPotential) {
  const Grid g = Grid::make_1d(2.0, 0.1, 0.1, 0.2);
  const int m0 = 3;
  const DensityTrajectory t =
      field_of(g, [&](double, double x) { return std::abs(x - g.x(m0)) < 1e-9 ? 1.0 / g.step() : 0.0; });
  const BasisSet B = basis_piecewise(4, 1, 2.0);
  const auto R = conv_R(B, t);
  for (std::size_t i = 0; i < B.size(); ++i) {
    for (int m = -g.half_count(); m <= g.half_count(); ++m) {
      EXPECT_NEAR(R[i].at(1, g.flat(m)), B.potential(i, std::abs(g.x(m) - g.x(m0))), 1e-12);
    }
  }
}

TEST(ConvR, QuadraticPotentialMoments) {
  const double sd = 0.4, s = 6.0;
  for (double h : {0.04, 0.02}) {
    const Grid g = Grid::make_1d(3.0, h, 0.1, 0.2);
    const DensityTrajectory t = field_of(g, [&](double, double x) {
      return std::abs(x) <= 3.0 ? std::exp(-x * x / (2 * sd * sd)) / (sd * std::sqrt(2 * std::numbers::pi)) : 0.0;
    });
    const auto R = conv_R(basis_polynomial(2, s), t);
    double worst = 0.0;
    for (int m = -g.active_half_count(); m <= g.active_half_count(); ++m) {
      const double x = g.x(m);
      worst = std::max(worst, std::abs(R[1].at(0, g.flat(m)) - (x * x + sd * sd) / (2 * s)));
    }
    EXPECT_LT(worst, 0.5 * h * h);
  }
}

TEST(ConvC, SymmetricDensityHasNoForceAtOrigin) {
  const Grid g = Grid::make_1d(2.0, 0.05, 0.1, 0.2);
  const DensityTrajectory t =
      field_of(g, [](double, double x) { return std::abs(x) < 2.0 ? std::exp(-x * x) : 0.0; });
  const auto C = conv_C(gaussian_basis(), t);
  for (const auto& f : C) EXPECT_NEAR(f.at(1, g.flat(0)), 0.0, 1e-14);
}

TEST(ConvC, MatchesLoopOracle) {
  const DensityTrajectory t = small_run(gaussian_model());
  const Grid& g = t.grid();
  const BasisSet B = gaussian_basis();
  const auto C = conv_C(B, t);
  const int M = g.half_count();
  for (int l : {1, g.steps() - 1}) {
    for (int m = -M; m <= M; m += 7) {
      for (std::size_t i = 0; i < B.size(); ++i) {
        double ref = 0.0;
        for (int k = -M; k <= M; ++k) {
          double gx, gy;
          B.element(i).gradient(1, g.x(m) - g.x(k), 0.0, gx, gy);
          ref += gx * t.at(l, k) * g.step();
        }
        EXPECT_NEAR(C[i].at(l, g.flat(m)), ref, 1e-12);
      }
    }
  }
}

TEST(FluxF, ClosedForms) {
  const Grid g = Grid::make_1d(1.0, 0.1, 0.1, 0.2);
  ModelSpec diff;
  diff.diffusion = DiffusionLaw::power(0.3, 2.0);
  const Field f0 = flux_F(field_of(g, [](double, double) { return 1.5; }), diff);
  for (int m = -g.half_count(); m < g.half_count(); ++m) EXPECT_EQ(f0.at(0, g.flat(m)), 0.0);

  ModelSpec conf;
  conf.confinement = PotentialFn({{2, 0.5}});
  const DensityTrajectory t = field_of(g, [](double t, double x) { return 1.0 + t + x * x; });
  const Field f1 = flux_F(t, conf);
  for (int m = -g.half_count(); m <= g.half_count(); ++m) {
    EXPECT_NEAR(f1.at(2, g.flat(m)), t.at(2, m) * g.x(m), 1e-14);
  }

  const Field f2 = flux_F(t, diff);
  for (int m = -g.half_count(); m < g.half_count(); ++m) {
    const double ref = t.at(1, m) * (0.6 * t.at(1, m + 1) - 0.6 * t.at(1, m)) / g.step();
    EXPECT_NEAR(f2.at(1, g.flat(m)), ref, 1e-12);
  }
}

TEST(Assembly, DirectMatchesOracle) {
  const ModelSpec model = gaussian_model();
  const DensityTrajectory t = small_run(model);
  const BasisSet B = gaussian_basis();
  const LinearSystem sys = assemble_direct(B, t, model);
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  oracle_system(B, t, model, A, b);
  EXPECT_LE((sys.A - A).norm(), 1e-10 * A.norm());
  EXPECT_LE((sys.b - b).norm(), 1e-10 * b.norm());
  EXPECT_NEAR(sys.horizon, (t.grid().steps() - 1) * t.grid().dt(), 1e-15);
}

TEST(Assembly, LinearDiffusionAndConfinementMatchesOracle) {
  ModelSpec model = preset("example3").model;
  const DensityTrajectory t = small_run(model);
  const BasisSet B = basis_polynomial(4, 6.0);
  const LinearSystem sys = assemble_direct(B, t, model);
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  oracle_system(B, t, model, A, b);
  EXPECT_LE((sys.A - A).norm(), 1e-10 * A.norm());
  EXPECT_LE((sys.b - b).norm(), 1e-10 * b.norm());
}

TEST(Assembly, GramProperties) {
  const ModelSpec model = gaussian_model();
  const LinearSystem sys = assemble_direct(gaussian_basis(), small_run(model), model);
  EXPECT_LE((sys.A - sys.A.transpose()).norm(), 1e-14 * sys.A.norm());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sys.A);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10 * sys.A.norm());
}

TEST(Assembly, ZeroElementAndDuplicates) {
  const ModelSpec model = gaussian_model();
  const DensityTrajectory t = small_run(model);
  const BasisSet zero(BasisSet::Family::polynomial, KernelForm::kernel,
                      {{0.0, RadialAtom{0, 0.0}}}, {});
  const LinearSystem z = assemble_direct(zero, t, model);
  ASSERT_EQ(z.size(), 1u);
  EXPECT_EQ(z.A(0, 0), 0.0);

  const BasisSet dup(BasisSet::Family::gaussian, KernelForm::kernel,
                     {{1.0 / 6, RadialAtom{1, 1.0}}, {1.0 / 6, RadialAtom{1, 1.0}}}, {});
  const LinearSystem d = assemble_direct(dup, t, model);
  EXPECT_EQ(d.A(0, 0), d.A(1, 1));
  EXPECT_EQ(d.A(0, 1), d.A(0, 0));
  EXPECT_EQ(d.b(0), d.b(1));
  EXPECT_NEAR(coherence(d.A), 1.0, 1e-14);
}

TEST(Assembly, TruthNearlySolvesSystem) {
  const ModelSpec model = gaussian_model();
  const DensityTrajectory t = small_run(model, 3.0);
  const BasisSet B = gaussian_basis();
  const LinearSystem sys = assemble_direct(B, t, model);
  const auto c = true_coefficients(model.interaction_kernel(), B, 6.0);
  ASSERT_TRUE(c);
  const Eigen::VectorXd ct = Eigen::Map<const Eigen::VectorXd>(c->data(), c->size());
  EXPECT_LT((sys.A * ct - sys.b).norm(), 0.05 * sys.b.norm());
}

TEST(Assembly, RejectsFormMismatch) {
  const DensityTrajectory t = small_run(gaussian_model());
  const BasisSet B2 = basis_gaussian({1.0, 2.0}, GaussianForm::scaled_derivative);
  EXPECT_THROW(assemble_direct(B2, t, gaussian_model()), InvalidParameter);
}

TEST(GKernel, SymmetryAndDualPath) {
  const ModelSpec model = gaussian_model();
  const DensityTrajectory t = small_run(model);
  const GKernel G = assemble_G(t);
  for (int p = -G.half; p <= G.half; p += 3) {
    for (int q = -G.half; q <= G.half; q += 5) ASSERT_EQ(G(p, q), G(q, p));
  }
  const BasisSet B = gaussian_basis();
  const LinearSystem d = assemble_direct(B, t, model);
  const LinearSystem v = assemble_via_G(B, G, t, model);
  EXPECT_LE((d.A - v.A).norm(), 1e-10 * d.A.norm());
  EXPECT_EQ(d.b, v.b);
}

TEST(GKernel, SymmetricDensityGivesPointSymmetricKernel) {
  const Grid g = Grid::make_1d(1.0, 0.1, 0.1, 0.3);
  const DensityTrajectory t =
      field_of(g, [](double, double x) { return std::abs(x) <= 1.0 ? 1.0 - x * x : 0.0; });
  const GKernel G = assemble_G(t);
  double scale = 0.0;
  for (double v : G.values) scale = std::max(scale, std::abs(v));
  for (int p = -G.half; p <= G.half; ++p) {
    for (int q = -G.half; q <= G.half; ++q) ASSERT_NEAR(G(p, q), G(-p, -q), 1e-12 * scale);
  }
}

TEST(GKernel, SingleNodeDensity) {
  const Grid g = Grid::make_1d(1.0, 0.1, 0.1, 0.3);
  const DensityTrajectory t =
      field_of(g, [&](double, double x) { return std::abs(x - 0.2) < 1e-9 ? 2.0 : 0.0; });
  const GKernel G = assemble_G(t);
  for (int p = -G.half; p <= G.half; ++p) {
    for (int q = -G.half; q <= G.half; ++q) {
      if (p != 0 || q != 0) ASSERT_EQ(G(p, q), 0.0);
    }
  }
  const BasisSet B = basis_piecewise(4, 0, 2.0);
  const ModelSpec model;
  EXPECT_EQ(assemble_via_G(B, G, t, model).A, assemble_direct(B, t, model).A);
}

TEST(GKernel, BudgetAndDimension) {
  const DensityTrajectory t = small_run(gaussian_model());
  EXPECT_THROW(assemble_G(t, 1024), BudgetExceeded);
  const Grid g2 = Grid::make_2d(1.0, 1.0, 0.5, 0.5, 0.1, 0.3);
  EXPECT_THROW(assemble_G(DensityTrajectory::zeros(g2)), InvalidParameter);
}

TEST(LinearSystem, BinaryRoundTrip) {
  const ModelSpec model = gaussian_model();
  const LinearSystem sys = assemble_direct(gaussian_basis(), small_run(model), model);
  const auto path = std::filesystem::temp_directory_path() / "aggdiff_sys_roundtrip.bin";
  write_system(sys, path);
  const LinearSystem back = read_system(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.A, sys.A);
  EXPECT_EQ(back.b, sys.b);
  EXPECT_EQ(back.basis_hash, sys.basis_hash);
  EXPECT_EQ(back.horizon, sys.horizon);
}
