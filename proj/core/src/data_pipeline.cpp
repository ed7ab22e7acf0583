#include "aggdiff/data_pipeline.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "aggdiff/errors.hpp"

namespace aggdiff {

Philox4x32::Counter Philox4x32::block(Counter ctr, Key key) {
  constexpr std::uint32_t kM0 = 0xD2511F53, kM1 = 0xCD9E8D57;
  constexpr std::uint32_t kW0 = 0x9E3779B9, kW1 = 0xBB67AE85;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

double philox_normal(std::uint64_t seed, std::uint64_t slice, std::uint64_t node) {
  const auto w = Philox4x32::block(
      {static_cast<std::uint32_t>(node), static_cast<std::uint32_t>(node >> 32),
       static_cast<std::uint32_t>(slice), static_cast<std::uint32_t>(slice >> 32)},
      {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  // Two 53-bit uniforms in (0, 1), then Box-Muller.
  auto uniform = [](std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 21) ^ (lo >> 11);
    return (static_cast<double>(bits & ((1ULL << 53) - 1)) + 0.5) * 0x1.0p-53;
  };
  const double u1 = uniform(w[0], w[1]);
  const double u2 = uniform(w[2], w[3]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double noise_sigma(const DensityTrajectory& traj, double percent) {
  if (!(percent >= 0.0 && percent <= 100.0)) {
    throw InvalidParameter("noise percent must lie in [0, 100]");
  }
  if (percent == 0.0) return 0.0;
  const Grid& g = traj.grid();
  double sum = 0.0;
  for (int l = 1; l <= g.steps(); ++l) {
    for (double v : traj.slice(l)) sum += v * v;
  }
  return percent / 100.0 * std::sqrt(sum * g.cell_volume() * g.dt());
}

DensityTrajectory add_noise(const DensityTrajectory& traj, const NoiseSpec& spec) {
  if (traj.noisy()) throw InvalidInput("trajectory already carries noise");
  const double sigma = noise_sigma(traj, spec.percent);
  DensityTrajectory out = traj;
  if (spec.percent == 0.0) return out;
  const Grid& g = traj.grid();
  for (int l = 0; l <= g.steps(); ++l) {
    auto s = out.slice(l);
    for (int mx = -g.active_half_count(0); mx <= g.active_half_count(0); ++mx) {
      for (int my = -g.active_half_count(1); my <= g.active_half_count(1); ++my) {
        const std::size_t i = g.flat(mx, my);
        s[i] += sigma * philox_normal(spec.seed, static_cast<std::uint64_t>(l), i);
      }
    }
  }
  out.mark_noisy(true);
  auto& p = out.provenance();
  p.seed = spec.seed;
  p.noise_percent = spec.percent;
  p.noise_sigma = sigma;
  std::ostringstream tag;
  tag << "noise " << spec.percent << "%";
  p.stages.push_back(tag.str());
  return out;
}

DensityTrajectory observe(const DensityTrajectory& fine, int cx, int ct, const NoiseSpec& noise) {
  return add_noise(restrict(fine, cx, ct), noise);
}

}  // namespace aggdiff
