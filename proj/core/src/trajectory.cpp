#include "aggdiff/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aggdiff/errors.hpp"

namespace aggdiff {

nlohmann::json Provenance::to_json() const {
  return {{"model_hash", model_hash},
          {"seed", seed},
          {"noise_percent", noise_percent},
          {"noise_sigma", noise_sigma},
          {"stages", stages}};
}

Provenance Provenance::from_json(const nlohmann::json& j) {
  Provenance p;
  p.model_hash = j.value("model_hash", std::string{});
  p.seed = j.value("seed", std::uint64_t{0});
  p.noise_percent = j.value("noise_percent", 0.0);
  p.noise_sigma = j.value("noise_sigma", 0.0);
  p.stages = j.value("stages", std::vector<std::string>{});
  return p;
}

DensityTrajectory::DensityTrajectory(Grid grid, std::vector<double> values, bool noisy,
                                     Provenance provenance)
    : grid_(std::move(grid)),
      values_(std::move(values)),
      noisy_(noisy),
      provenance_(std::move(provenance)) {
  const std::size_t expected =
      static_cast<std::size_t>(grid_.time_slices()) * grid_.nodes_per_slice();
  if (values_.size() != expected) {
    throw InvalidParameter("trajectory has " + std::to_string(values_.size()) +
                           " samples, grid expects " + std::to_string(expected));
  }
}

DensityTrajectory DensityTrajectory::zeros(const Grid& grid) {
  return DensityTrajectory(
      grid, std::vector<double>(static_cast<std::size_t>(grid.time_slices()) *
                                grid.nodes_per_slice()));
}

std::span<const double> DensityTrajectory::slice(int l) const {
  if (l < 0 || l > grid_.steps()) throw InvalidParameter("time index out of range");
  const std::size_t n = grid_.nodes_per_slice();
  return {values_.data() + static_cast<std::size_t>(l) * n, n};
}

std::span<double> DensityTrajectory::slice(int l) {
  if (l < 0 || l > grid_.steps()) throw InvalidParameter("time index out of range");
  const std::size_t n = grid_.nodes_per_slice();
  return {values_.data() + static_cast<std::size_t>(l) * n, n};
}

double DensityTrajectory::mass(int l) const {
  double s = 0.0;
  for (double v : slice(l)) s += v;
  return s * grid_.cell_volume();
}

double DensityTrajectory::max_relative_mass_drift() const {
  const double m0 = mass(0);
  const double scale = std::max(std::abs(m0), 1e-300);
  double worst = 0.0;
  for (int l = 1; l <= grid_.steps(); ++l) {
    worst = std::max(worst, std::abs(mass(l) - m0) / scale);
  }
  return worst;
}

void DensityTrajectory::check_conservation(double rel_tol) const {
  if (noisy_) return;
  for (double v : values_) {
    if (v < 0.0) throw InvalidInput("noise-free trajectory has a negative sample");
  }
  const double drift = max_relative_mass_drift();
  if (drift > rel_tol) {
    throw InvalidInput("mass drift " + std::to_string(drift) + " exceeds tolerance " +
                       std::to_string(rel_tol));
  }
}

DensityTrajectory restrict(const DensityTrajectory& traj, int cx, int ct) {
  const Grid& fine = traj.grid();
  const Grid coarse = fine.coarsened(cx, ct);
  DensityTrajectory out = DensityTrajectory::zeros(coarse);
  const int cy = fine.dim() == 2 ? cx : 1;
  for (int l = 0; l <= coarse.steps(); ++l) {
    auto src = traj.slice(l * ct);
    auto dst = out.slice(l);
    for (int mx = -coarse.half_count(0); mx <= coarse.half_count(0); ++mx) {
      for (int my = -coarse.half_count(1); my <= coarse.half_count(1); ++my) {
        dst[coarse.flat(mx, my)] = src[fine.flat(mx * cx, my * cy)];
      }
    }
  }
  out.mark_noisy(traj.noisy());
  if (!traj.noisy()) {
    // Point sampling changes a Riemann sum by at most coarse step times the
    // total variation along that axis; drift compares two slices, hence 2x.
    double worst = 0.0;
    for (int l = 0; l <= coarse.steps(); ++l) {
      auto src = traj.slice(l * ct);
      double err = 0.0;
      for (int a = 0; a < fine.dim(); ++a) {
        double tv = 0.0;
        for (int mx = -fine.half_count(0); mx <= fine.half_count(0) - (a == 0); ++mx) {
          for (int my = -fine.half_count(1); my <= fine.half_count(1) - (a == 1); ++my) {
            tv += std::abs(src[fine.flat(mx + (a == 0), my + (a == 1))] - src[fine.flat(mx, my)]);
          }
        }
        err += tv * fine.cell_volume() / fine.step(a) * coarse.step(a);
      }
      worst = std::max(worst, err);
    }
    const double m0 = traj.mass(0);
    const double relaxed = m0 > 0.0 ? 2.0 * worst / m0 : 0.0;
    out.check_conservation(std::max(relaxed, 1e-10));
  }
  out.provenance() = traj.provenance();
  out.provenance().stages.push_back("restrict " + std::to_string(cx) + "x" +
                                    std::to_string(ct));
  return out;
}

}  // namespace aggdiff
