#pragma once

#include <array>
#include <cstdint>

#include "aggdiff/trajectory.hpp"

namespace aggdiff {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Each
/// (counter, key) pair maps to four independent 32-bit words, so any sample
/// can be drawn without generating the ones before it.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;
  static Counter block(Counter ctr, Key key);
};

/// Standard normal deviate for node `node` of slice `slice` under `seed`.
double philox_normal(std::uint64_t seed, std::uint64_t slice, std::uint64_t node);

struct NoiseSpec {
  double percent = 0.0;
  std::uint64_t seed = 0;
};

/// sigma = (p/100) * sqrt(sum_{l=1..L} sum_m rho^2 dV dt) on the trajectory's mesh.
double noise_sigma(const DensityTrajectory& traj, double percent);

/// rho + eps with eps ~ N(0, sigma^2) i.i.d. on active nodes of every slice.
DensityTrajectory add_noise(const DensityTrajectory& traj, const NoiseSpec& spec);

/// Downsample then add noise, the fixed order used by every pipeline.
DensityTrajectory observe(const DensityTrajectory& fine, int cx, int ct, const NoiseSpec& noise);

}  // namespace aggdiff
