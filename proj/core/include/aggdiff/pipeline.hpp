#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aggdiff/assembly.hpp"
#include "aggdiff/basis.hpp"
#include "aggdiff/presets.hpp"
#include "aggdiff/pruning.hpp"
#include "aggdiff/sparse_solvers.hpp"
#include "aggdiff/trajectory.hpp"

namespace aggdiff {

/// Solver-scale trajectory for the config: a solver run, or the analytic
/// stationary profile repeated on every slice.
DensityTrajectory simulate(const ExperimentConfig& config, SolveStats* stats = nullptr);

/// Downsampled, possibly noisy observations of the solver trajectory.
DensityTrajectory observations(const ExperimentConfig& config, const DensityTrajectory& fine);

LinearSystem assemble(const ExperimentConfig& config, const BasisSet& basis,
                      const DensityTrajectory& data);

SparseSolution sparse_solve(const ExperimentConfig& config, const LinearSystem& sys);

struct RunOptions {
  /// Artifacts are written here when set.
  std::optional<std::filesystem::path> out;
  /// Trajectories and systems are cached here, keyed by config hashes.
  std::optional<std::filesystem::path> cache;
  bool csv = true;
};

struct RunResult {
  ExperimentConfig config;
  DensityTrajectory data;
  LinearSystem system;
  SparseSolution solution;
  SparseSolution least_squares;
  std::optional<PruningReport> pruning;
  /// Final estimate (pruned when pruning ran).
  Eigen::VectorXd coefficients;
  std::vector<int> support;
  std::optional<Eigen::VectorXd> truth;
  /// NaN when the true kernel is not in the dictionary's span.
  double reconstruction_error = 0.0;
  double ls_reconstruction_error = 0.0;
  double coherence = 0.0;
  bool cache_hit_data = false;
  bool cache_hit_system = false;
  nlohmann::json manifest;
};

/// simulate, observe, assemble, solve, prune, score. Stage failures are
/// rethrown as PipelineError tagged with the stage and a repro command.
RunResult run(const ExperimentConfig& config, const RunOptions& options = {});

/// Reads the config embedded in a manifest written by run().
ExperimentConfig config_from_manifest(const std::filesystem::path& manifest);

struct NoiseSweepRow {
  double percent = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  double support_rate = 0.0;
  std::vector<double> errors;
};

struct NoiseSweep {
  std::vector<NoiseSweepRow> rows;
  std::uint64_t base_seed = 0;
  void write_csv(const std::filesystem::path& path) const;
};

/// For every p, `trials` noisy observations of one solver run with seeds
/// base_seed ^ i, each solved with the config's solver.
NoiseSweep sweep_noise(const ExperimentConfig& config, const std::vector<double>& percents,
                       int trials, std::uint64_t base_seed, unsigned threads = 0);

struct MeshSweepRow {
  int cx = 1;
  int ct = 1;
  double dx = 0.0;
  double dt = 0.0;
  double reconstruction_error = 0.0;
  std::vector<int> support;
};

/// Reconstruction error over a grid of downsampling factors (noise-free).
std::vector<MeshSweepRow> sweep_mesh(const ExperimentConfig& config, const std::vector<int>& cx,
                                     const std::vector<int>& ct);
void write_mesh_csv(const std::vector<MeshSweepRow>& rows, const std::filesystem::path& path);

/// Normalised |<a_i, a_j>| for every pair of columns (rows of the CSV).
void write_coherence_csv(const Eigen::MatrixXd& A, const std::filesystem::path& path);

}  // namespace aggdiff
