#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "aggdiff/fv_solver.hpp"
#include "aggdiff/models.hpp"
#include "aggdiff/trajectory.hpp"

namespace aggdiff {

/// ||c - c_hat|| / ||c||.
double reconstruction_error(const Eigen::VectorXd& c_true, const Eigen::VectorXd& c_hat);

/// (1/T) sum |grad W_hat * rho - grad W * rho|^2 rho dV dt on the trajectory's
/// mesh, with the same quadrature and time window as the regression matrix.
double error_functional(const RadialKernel& W_hat, const RadialKernel& W,
                        const DensityTrajectory& traj);

/// 2-Wasserstein distance of two 1D densities on the same grid slice layout.
/// Mass is spread uniformly over each node's cell and both are normalised.
double wasserstein2_1d(std::span<const double> rho1, std::span<const double> rho2, const Grid& grid,
                       int quantiles = 4096);

struct StabilityProbe {
  double epsilon = 0.0;
  double error_functional = 0.0;
  double sup_d2_squared = 0.0;
  double final_d2_squared = 0.0;
  double initial_d2_squared = 0.0;
};

struct StabilitySweep {
  std::vector<StabilityProbe> probes;
  /// d2^2 and E both strictly increasing in epsilon.
  bool monotone = false;
  /// Ranking of final d2^2 agrees with the ranking of E.
  bool rank_consistent = false;
  double max_ratio = 0.0;

  void write_csv(const std::filesystem::path& path) const;
};

enum class Perturbation { interaction, confinement };

/// Runs the model and the perturbed model (W or V scaled by 1 + eps) from the
/// same initial data and compares them.
StabilitySweep stability_sweep(const ModelSpec& model, std::span<const double> rho0,
                               const SolverConfig& solver, const std::vector<double>& epsilons,
                               Perturbation kind = Perturbation::interaction);

/// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace aggdiff
