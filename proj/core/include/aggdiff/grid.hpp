#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <cstdlib>

#include "json.hpp"

namespace aggdiff {

/// Uniform node-centred space-time mesh in one or two space dimensions.
///
/// Nodes sit at x_m = m * dx for m = -M..M with M = ceil(2R/dx), so the stored
/// lattice covers [-2R, 2R]; the physical domain [-R, R] is the "active" part
/// with |m| <= N = floor(R/dx). Times are t_l = l * dt for l = 0..L with
/// L * dt <= T < (L+1) * dt. Coordinates are always computed as index * step.
///
/// A 1D grid has a degenerate second axis (M = N = 0, unit step) so the same
/// flat indexing serves both dimensions.
class Grid {
 public:
  static Grid make_1d(double R, double dx, double dt, double T);
  static Grid make_2d(double Rx, double Ry, double dx, double dy, double dt, double T);

  int dim() const noexcept { return dim_; }

  double half_width(int axis = 0) const { return R_[axis]; }
  double step(int axis = 0) const { return h_[axis]; }
  /// M for the axis: stored nodes are m = -M..M.
  int half_count(int axis = 0) const { return M_[axis]; }
  /// N for the axis: nodes with |m| <= N lie in [-R, R].
  int active_half_count(int axis = 0) const { return N_[axis]; }
  int nodes(int axis = 0) const { return 2 * M_[axis] + 1; }
  std::size_t nodes_per_slice() const {
    return static_cast<std::size_t>(nodes(0)) * static_cast<std::size_t>(nodes(1));
  }

  double dt() const noexcept { return dt_; }
  int steps() const noexcept { return L_; }
  double final_time() const noexcept { return T_; }
  int time_slices() const noexcept { return L_ + 1; }

  double x(int m) const { return m * h_[0]; }
  double y(int m) const { return m * h_[1]; }
  double coord(int axis, int m) const { return m * h_[axis]; }
  double t(int l) const { return l * dt_; }

  int index_of(double coordinate, int axis = 0) const;

  /// dx in 1D, dx*dy in 2D.
  double cell_volume() const { return dim_ == 1 ? h_[0] : h_[0] * h_[1]; }

  bool is_active(int mx, int my = 0) const {
    return std::abs(mx) <= N_[0] && std::abs(my) <= N_[1];
  }

  /// Flat index of node (mx, my); row-major with x as the slow axis.
  std::size_t flat(int mx, int my = 0) const {
    return static_cast<std::size_t>(mx + M_[0]) * static_cast<std::size_t>(nodes(1)) +
           static_cast<std::size_t>(my + M_[1]);
  }

  /// Grid with coarser steps dx' = cx*dx, dt' = ct*dt on the same lattice.
  Grid coarsened(int cx, int ct) const;
  /// Same spatial lattice with a different time axis.
  Grid with_time(double dt, int L) const;

  nlohmann::json to_json() const;
  static Grid from_json(const nlohmann::json& j);

  bool operator==(const Grid& other) const = default;

  /// Empty placeholder; use the factories for a usable mesh.
  Grid() = default;

 private:
  void validate() const;

  int dim_ = 1;
  std::array<double, 2> R_{0.0, 0.0};
  std::array<double, 2> h_{1.0, 1.0};
  std::array<int, 2> M_{0, 0};
  std::array<int, 2> N_{0, 0};
  double dt_ = 1.0;
  int L_ = 0;
  double T_ = 0.0;
};

}  // namespace aggdiff
