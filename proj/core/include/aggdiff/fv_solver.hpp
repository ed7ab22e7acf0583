#pragma once

#include <functional>
#include <span>
#include <vector>

#include "aggdiff/grid.hpp"
#include "aggdiff/models.hpp"
#include "aggdiff/trajectory.hpp"

namespace aggdiff {

struct SolverConfig {
  enum class Stepping { fixed, adaptive };

  /// Solver-scale mesh (delta x, delta t, T).
  Grid grid;
  double cfl_safety = 0.9;
  double theta = 1.5;
  int snapshot_stride = 1;
  Stepping stepping = Stepping::fixed;
  /// Cells whose density is below donor_floor * max(rho) are left out of the
  /// CFL maximum; the flux limiter keeps them non-negative instead.
  double donor_floor = 1e-10;
  long max_substeps = 20'000'000;
  /// Called after every stored snapshot with (snapshot index, snapshot count).
  std::function<void(int, int)> progress;

  void validate() const;
};

/// Interface velocities on the active cells. In 1D ux has 2N+2 entries, one per
/// interface from the left wall to the right wall (walls are zero). In 2D ux is
/// (2Nx+2) x (2Ny+1) and uy is (2Nx+1) x (2Ny+2), both row-major.
struct VelocityField {
  int nx = 0;
  int ny = 1;
  std::vector<double> ux;
  std::vector<double> uy;

  static double plus(double u) { return u > 0.0 ? u : 0.0; }
  static double minus(double u) { return u < 0.0 ? u : 0.0; }
};

/// u = -grad(H'(rho) + V + W*rho) at cell interfaces. rho_slice is a full
/// slice on the stored lattice; only active nodes are used.
VelocityField velocity_from_state(std::span<const double> rho_slice, const ModelSpec& model,
                                  const Grid& grid);

/// Largest positivity-preserving step, safety / (2 max_cell(a/dx + b/dy)),
/// with a, b the outgoing one-sided speeds of each cell. When rho is given,
/// cells below donor_floor * max(rho) are ignored. Infinity when nothing moves.
double cfl_timestep(const VelocityField& u, const Grid& grid, double safety,
                    std::span<const double> rho_slice = {}, double donor_floor = 0.0);

/// Explicit stability limit of the diffusion part, safety / (2 D sum_a 1/h_a^2)
/// with D = max rho H''(rho) over cells above donor_floor * max(rho).
double diffusive_timestep(const DiffusionLaw& diffusion, std::span<const double> rho_slice,
                          const Grid& grid, double safety, double donor_floor = 0.0);

struct SolveStats {
  long substeps = 0;
  long limited_fluxes = 0;
  double min_dt = 0.0;
  double max_dt = 0.0;
};

/// Integrates the PDE from rho0 (a slice on config.grid) to config.grid.steps()
/// and returns snapshots every snapshot_stride steps.
DensityTrajectory solve(const ModelSpec& model, std::span<const double> rho0,
                        const SolverConfig& config, SolveStats* stats = nullptr);

}  // namespace aggdiff
