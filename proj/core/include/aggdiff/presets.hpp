#pragma once

#include <string>
#include <vector>

#include "aggdiff/basis.hpp"
#include "aggdiff/data_pipeline.hpp"
#include "aggdiff/fv_solver.hpp"
#include "aggdiff/models.hpp"
#include "aggdiff/pruning.hpp"
#include "json.hpp"

namespace aggdiff {

/// Everything needed to reproduce one experiment. Serialises to JSON; the
/// hash of that JSON keys the artifact cache.
struct ExperimentConfig {
  std::string name;
  ModelSpec model;
  /// Initial datum, e.g. {"kind": "indicator", "lo": -2, "hi": 2}.
  nlohmann::json initial;

  int dim = 1;
  double R = 6.0;
  double dx = 0.01;
  double dt = 1e-4;
  double T = 1.0;
  /// Stationary closed-form data instead of a solver run.
  bool analytic = false;
  SolverConfig::Stepping stepping = SolverConfig::Stepping::fixed;
  double cfl_safety = 0.9;
  double theta = 1.5;

  int cx = 1;
  int ct = 1;
  NoiseSpec noise;

  /// Dictionary description, e.g. {"family": "piecewise", "n": 12, "degree": 0}.
  nlohmann::json basis;
  std::string assembly = "direct";
  std::string solver = "partinv";
  int K = 1;
  double stls_threshold = 0.1;
  double rel_tol = 1e-12;

  bool prune = false;
  PruningConfig pruning;

  /// Solver-scale grid (delta x, delta t, T).
  Grid solver_grid() const;
  /// Observational grid after downsampling.
  Grid observation_grid() const;

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  std::string hash() const;
};

BasisSet make_basis(const nlohmann::json& spec);

/// Samples the initial datum on the active nodes of `grid` (zero elsewhere).
/// Indicators are cell-averaged; smooth data is point-sampled.
std::vector<double> initial_slice(const nlohmann::json& spec, const Grid& grid);

/// Names accepted by preset(): example1..example5, their variants, and the
/// "-desk" reduced versions of each.
std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);

}  // namespace aggdiff
