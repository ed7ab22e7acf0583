#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "aggdiff/grid.hpp"
#include "json.hpp"

namespace aggdiff {

/// Where a trajectory came from; carried in serialized headers.
struct Provenance {
  std::string model_hash;
  std::uint64_t seed = 0;
  double noise_percent = 0.0;
  double noise_sigma = 0.0;
  /// Processing stages in the order applied, e.g. {"simulate", "restrict 6x50", "noise"}.
  std::vector<std::string> stages;

  nlohmann::json to_json() const;
  static Provenance from_json(const nlohmann::json& j);
};

/// Density samples rho(t_l, x_m) for l = 0..L on every stored node of a Grid.
class DensityTrajectory {
 public:
  DensityTrajectory(Grid grid, std::vector<double> values, bool noisy = false,
                    Provenance provenance = {});

  /// A trajectory of L+1 zero slices on the grid.
  static DensityTrajectory zeros(const Grid& grid);

  const Grid& grid() const noexcept { return grid_; }
  bool noisy() const noexcept { return noisy_; }
  const Provenance& provenance() const noexcept { return provenance_; }
  Provenance& provenance() noexcept { return provenance_; }

  int time_slices() const noexcept { return grid_.time_slices(); }
  std::span<const double> slice(int l) const;
  std::span<double> slice(int l);
  std::span<const double> values() const noexcept { return values_; }

  double at(int l, int mx, int my = 0) const { return slice(l)[grid_.flat(mx, my)]; }

  /// Discrete mass sum_m rho_m^l * cell volume.
  double mass(int l) const;

  /// Largest relative deviation of mass(l) from mass(0).
  double max_relative_mass_drift() const;

  /// Throws InvalidInput when a noise-free trajectory has a negative sample or
  /// its mass drifts by more than rel_tol.
  void check_conservation(double rel_tol) const;

  void mark_noisy(bool noisy) { noisy_ = noisy; }

 private:
  Grid grid_;
  std::vector<double> values_;
  bool noisy_ = false;
  Provenance provenance_;
};

/// Point-subsamples every cx-th node along each space axis and every ct-th
/// time slice. Refuses factors that do not align with the lattice.
DensityTrajectory restrict(const DensityTrajectory& traj, int cx, int ct);

/// Binary container: magic line, 8-byte little-endian header length, JSON
/// header (grid, provenance, noisy flag), then row-major float64 samples.
void write_trajectory(const DensityTrajectory& traj, const std::filesystem::path& path);
DensityTrajectory read_trajectory(const std::filesystem::path& path);

/// CSV with columns t,x,rho (1D) or t,x,y,rho (2D); active nodes only.
void export_trajectory_csv(const DensityTrajectory& traj, const std::filesystem::path& path);

}  // namespace aggdiff
