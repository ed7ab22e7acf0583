#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aggdiff/basis.hpp"
#include "aggdiff/models.hpp"
#include "aggdiff/trajectory.hpp"

namespace aggdiff {

/// Scalar samples on every stored node of `slices` consecutive time levels.
struct Field {
  Grid grid;
  int slices = 0;
  std::vector<double> values;

  double at(int l, std::size_t node) const { return values[static_cast<std::size_t>(l) * grid.nodes_per_slice() + node]; }
  double& at(int l, std::size_t node) { return values[static_cast<std::size_t>(l) * grid.nodes_per_slice() + node]; }
};

/// Forward time difference (v^{l+1} - v^l)/dt for l = 0..L-1.
Field fd_time(const DensityTrajectory& traj);

/// Forward space difference along `axis` with the one-sided closure -v_M/dx
/// on the last node; applied to every slice.
Field fd_space(const DensityTrajectory& traj, int axis = 0);

/// R^i(t_l, x_m) = sum_k Psi_i(x_m - x_k) rho_k^l dV for every node and slice;
/// element i occupies values[i].
std::vector<Field> conv_R(const BasisSet& basis, const DensityTrajectory& traj);

/// Component `axis` of C^i = sum_k grad Psi_i(x_m - x_k) rho_k^l dV.
std::vector<Field> conv_C(const BasisSet& basis, const DensityTrajectory& traj, int axis = 0);

/// Component `axis` of F = rho (D^+ H'(rho) + grad V), all slices.
Field flux_F(const DensityTrajectory& traj, const ModelSpec& model, int axis = 0);

struct LinearSystem {
  enum class Path { direct, via_G };

  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Path path = Path::direct;
  /// Horizon in the 1/T prefactor.
  double horizon = 0.0;
  int first_slice = 1;
  int last_slice = 0;
  std::string basis_hash;
  nlohmann::json grid;

  std::size_t size() const { return static_cast<std::size_t>(b.size()); }
  nlohmann::json to_json() const;
};

/// Time window used by every assembly routine: slices l = 1..L-1 (the
/// forward difference at l needs slice l+1), horizon (L-1) dt.
struct TimeWindow {
  int first = 1;
  int last = 0;
  double horizon = 0.0;
  static TimeWindow of(const Grid& grid);
};

LinearSystem assemble_direct(const BasisSet& basis, const DensityTrajectory& traj,
                             const ModelSpec& model);

/// Only b; shared by both assembly paths.
Eigen::VectorXd assemble_b(const BasisSet& basis, const DensityTrajectory& traj,
                           const ModelSpec& model);

/// Gram matrix (1/T) sum C_i . C_j rho dV dt for arbitrary radial kernels,
/// given in the form matching the grid dimension.
Eigen::MatrixXd force_gram(const std::vector<RadialKernel>& kernels, const DensityTrajectory& traj);

/// G(m, m') on offsets m, m' in [-2M, 2M] (1D only), row-major.
struct GKernel {
  int half = 0;  // 2M
  std::vector<double> values;
  std::size_t width() const { return static_cast<std::size_t>(2 * half + 1); }
  double operator()(int m, int mp) const {
    return values[static_cast<std::size_t>(m + half) * width() + static_cast<std::size_t>(mp + half)];
  }
};

/// Throws BudgetExceeded when the table would exceed budget_bytes.
GKernel assemble_G(const DensityTrajectory& traj, std::size_t budget_bytes = std::size_t{2} << 30);

LinearSystem assemble_via_G(const BasisSet& basis, const GKernel& G, const DensityTrajectory& traj,
                            const ModelSpec& model);

/// JSON header followed by column-major float64 A and b.
void write_system(const LinearSystem& sys, const std::filesystem::path& path);
LinearSystem read_system(const std::filesystem::path& path);

}  // namespace aggdiff
