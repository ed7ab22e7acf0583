#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aggdiff/basis.hpp"
#include "aggdiff/fv_solver.hpp"
#include "aggdiff/models.hpp"
#include "aggdiff/trajectory.hpp"

namespace aggdiff {

/// All nonempty subsets of I ordered by size, then lexicographically.
std::vector<std::vector<int>> enumerate_subsets(const std::vector<int>& I, std::size_t guard = 12);

struct PruningRow {
  std::vector<int> subset;
  Eigen::VectorXd c;
  double re = 0.0;
  std::optional<double> tee;
  bool in_cluster = false;
};

/// Rows with RE <= RE_min + tau_rel * max(|RE_min|, RE_max - RE_min).
std::vector<std::size_t> cluster_candidates(const std::vector<PruningRow>& rows, double tau_rel);

struct TeeConfig {
  /// Fine mesh; both must divide the observational steps evenly.
  double fine_dx = 0.0;
  double fine_dt = 0.0;
  /// Number of observational steps compared (T-hat = steps * data dt).
  int horizon_steps = 10;
  double cfl_safety = 0.9;
  double theta = 1.5;
  long max_substeps = 5'000'000;
};

/// Time evolution error of the kernel sum_i c_i Psi_i against the data.
/// `model` supplies diffusion and confinement; its interaction is replaced.
/// Returns +infinity when the re-simulation diverges.
double tee(const ModelSpec& model, const BasisSet& basis, const Eigen::VectorXd& c,
           const DensityTrajectory& data, const TeeConfig& config,
           std::string* diagnostic = nullptr);

struct PruningConfig {
  double tau_rel = 0.2;
  double rel_tol = 1e-12;
  /// Evaluate TEE on every subset instead of the RE cluster only.
  bool tee_all = false;
  TeeConfig tee;
};

struct PruningReport {
  std::vector<PruningRow> rows;
  std::size_t chosen = 0;
  double tau_rel = 0.0;
  TeeConfig tee;
  double horizon = 0.0;

  const PruningRow& best() const { return rows.at(chosen); }
  nlohmann::json to_json() const;
  void write_csv(const std::filesystem::path& path) const;
};

PruningReport prune(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const std::vector<int>& I,
                    const BasisSet& basis, const ModelSpec& model, const DensityTrajectory& data,
                    const PruningConfig& config);

}  // namespace aggdiff
