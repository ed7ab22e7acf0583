#include "aggdiff/fv_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "aggdiff/errors.hpp"

namespace aggdiff {

void SolverConfig::validate() const {
  if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) {
    throw InvalidParameter("cfl_safety must lie in (0, 1]");
  }
  if (!(theta >= 1.0 && theta <= 2.0)) throw InvalidParameter("minmod theta must lie in [1, 2]");
  if (snapshot_stride < 1) throw InvalidParameter("snapshot stride must be positive");
  if (grid.steps() % snapshot_stride != 0) {
    throw IndexAlignmentError("snapshot stride " + std::to_string(snapshot_stride) +
                              " does not divide the step count " +
                              std::to_string(grid.steps()));
  }
  if (!(donor_floor >= 0.0 && donor_floor < 1.0)) {
    throw InvalidParameter("donor_floor must lie in [0, 1)");
  }
  if (max_substeps < 1) throw InvalidParameter("max_substeps must be positive");
}

namespace {

double minmod(double a, double b, double c) {
  if (a > 0.0 && b > 0.0 && c > 0.0) return std::min({a, b, c});
  if (a < 0.0 && b < 0.0 && c < 0.0) return std::max({a, b, c});
  return 0.0;
}

/// Semi-discrete operator on the active cells of a grid.
class Scheme {
 public:
  Scheme(const ModelSpec& model, const Grid& grid, double theta)
      : grid_(grid), diffusion_(model.diffusion), theta_(theta) {
    dim_ = grid.dim();
    Nx_ = grid.active_half_count(0);
    Ny_ = dim_ == 2 ? grid.active_half_count(1) : 0;
    nx_ = 2 * Nx_ + 1;
    ny_ = 2 * Ny_ + 1;
    hx_ = grid.step(0);
    hy_ = dim_ == 2 ? grid.step(1) : 1.0;
    const std::size_t n = cells();

    V_.resize(n);
    for (int ix = 0; ix < nx_; ++ix) {
      for (int iy = 0; iy < ny_; ++iy) {
        V_[cell(ix, iy)] = model.confinement.value(grid.x(ix - Nx_), dim_ == 2 ? grid.y(iy - Ny_) : 0.0);
      }
    }

    // W sampled on the offset lattice, shifted so it vanishes where it is constant.
    const RadialKernel W = model.interaction_kernel();
    const double support = W.potential_support();
    const double shift = std::isfinite(support) ? W.potential(support) : 0.0;
    kx_ = nx_ - 1;
    ky_ = ny_ - 1;
    if (std::isfinite(support)) {
      kx_ = std::min(kx_, static_cast<int>(std::ceil(support / hx_)) + 1);
      if (dim_ == 2) ky_ = std::min(ky_, static_cast<int>(std::ceil(support / hy_)) + 1);
    }
    const int tx = 2 * kx_ + 1;
    const int ty = 2 * ky_ + 1;
    wtab_.assign(static_cast<std::size_t>(tx) * ty, 0.0);
    for (int dx = -kx_; dx <= kx_; ++dx) {
      for (int dy = -ky_; dy <= ky_; ++dy) {
        const double r = std::hypot(dx * hx_, dy * hy_);
        wtab_[static_cast<std::size_t>(dx + kx_) * ty + (dy + ky_)] = W.potential(r) - shift;
      }
    }

    xi_.resize(n);
    conv_.resize(n);
    sx_.resize(n);
    sy_.resize(n);
    scale_.resize(n);
    fx_.resize(static_cast<std::size_t>(nx_ + 1) * ny_);
    fy_.resize(static_cast<std::size_t>(nx_) * (ny_ + 1));
  }

  std::size_t cells() const { return static_cast<std::size_t>(nx_) * ny_; }
  std::size_t cell(int ix, int iy) const { return static_cast<std::size_t>(ix) * ny_ + iy; }

  void load(std::span<const double> slice, std::vector<double>& rho) const {
    rho.resize(cells());
    for (int ix = 0; ix < nx_; ++ix) {
      for (int iy = 0; iy < ny_; ++iy) {
        rho[cell(ix, iy)] = slice[grid_.flat(ix - Nx_, iy - Ny_)];
      }
    }
  }

  void store(const std::vector<double>& rho, std::span<double> slice) const {
    for (int ix = 0; ix < nx_; ++ix) {
      for (int iy = 0; iy < ny_; ++iy) {
        slice[grid_.flat(ix - Nx_, iy - Ny_)] = rho[cell(ix, iy)];
      }
    }
  }

  void convolve(const std::vector<double>& rho) {
    std::fill(conv_.begin(), conv_.end(), 0.0);
    const int ty = 2 * ky_ + 1;
    for (int kx = 0; kx < nx_; ++kx) {
      for (int ky = 0; ky < ny_; ++ky) {
        const double src = rho[cell(kx, ky)];
        if (src == 0.0) continue;
        const int jx0 = std::max(0, kx - kx_), jx1 = std::min(nx_ - 1, kx + kx_);
        const int jy0 = std::max(0, ky - ky_), jy1 = std::min(ny_ - 1, ky + ky_);
        for (int jx = jx0; jx <= jx1; ++jx) {
          const double* w = &wtab_[static_cast<std::size_t>(jx - kx + kx_) * ty + (ky_ - ky)];
          double* out = &conv_[cell(jx, 0)];
          for (int jy = jy0; jy <= jy1; ++jy) out[jy] += w[jy] * src;
        }
      }
    }
    const double vol = hx_ * hy_;
    for (auto& v : conv_) v *= vol;
  }

  void velocity(const std::vector<double>& rho, VelocityField& u) {
    convolve(rho);
    for (std::size_t c = 0; c < cells(); ++c) {
      xi_[c] = diffusion_.derivative(rho[c]) + V_[c] + conv_[c];
    }
    u.nx = nx_;
    u.ny = ny_;
    u.ux.assign(static_cast<std::size_t>(nx_ + 1) * ny_, 0.0);
    for (int i = 1; i < nx_; ++i) {
      for (int iy = 0; iy < ny_; ++iy) {
        u.ux[static_cast<std::size_t>(i) * ny_ + iy] =
            -(xi_[cell(i, iy)] - xi_[cell(i - 1, iy)]) / hx_;
      }
    }
    if (dim_ == 2) {
      u.uy.assign(static_cast<std::size_t>(nx_) * (ny_ + 1), 0.0);
      for (int ix = 0; ix < nx_; ++ix) {
        for (int j = 1; j < ny_; ++j) {
          u.uy[static_cast<std::size_t>(ix) * (ny_ + 1) + j] =
              -(xi_[cell(ix, j)] - xi_[cell(ix, j - 1)]) / hy_;
        }
      }
    } else {
      u.uy.clear();
    }
  }

  /// One forward-Euler stage out = rho + dt * L(rho) using the velocity u of rho.
  long euler(const std::vector<double>& rho, const VelocityField& u, double dt,
             std::vector<double>& out) {
    // Limited slopes; boundary cells are reconstructed flat.
    std::fill(sx_.begin(), sx_.end(), 0.0);
    std::fill(sy_.begin(), sy_.end(), 0.0);
    for (int ix = 1; ix + 1 < nx_; ++ix) {
      for (int iy = 0; iy < ny_; ++iy) {
        const double l = rho[cell(ix - 1, iy)], c = rho[cell(ix, iy)], r = rho[cell(ix + 1, iy)];
        sx_[cell(ix, iy)] = minmod(theta_ * (r - c), 0.5 * (r - l), theta_ * (c - l)) / hx_;
      }
    }
    if (dim_ == 2) {
      for (int ix = 0; ix < nx_; ++ix) {
        for (int iy = 1; iy + 1 < ny_; ++iy) {
          const double l = rho[cell(ix, iy - 1)], c = rho[cell(ix, iy)], r = rho[cell(ix, iy + 1)];
          sy_[cell(ix, iy)] = minmod(theta_ * (r - c), 0.5 * (r - l), theta_ * (c - l)) / hy_;
        }
      }
    }

    std::fill(fx_.begin(), fx_.end(), 0.0);
    for (int i = 1; i < nx_; ++i) {
      for (int iy = 0; iy < ny_; ++iy) {
        const std::size_t f = static_cast<std::size_t>(i) * ny_ + iy;
        const std::size_t L = cell(i - 1, iy), R = cell(i, iy);
        const double east = rho[L] + 0.5 * hx_ * sx_[L];
        const double west = rho[R] - 0.5 * hx_ * sx_[R];
        fx_[f] = VelocityField::plus(u.ux[f]) * east + VelocityField::minus(u.ux[f]) * west;
      }
    }
    std::fill(fy_.begin(), fy_.end(), 0.0);
    if (dim_ == 2) {
      for (int ix = 0; ix < nx_; ++ix) {
        for (int j = 1; j < ny_; ++j) {
          const std::size_t f = static_cast<std::size_t>(ix) * (ny_ + 1) + j;
          const std::size_t S = cell(ix, j - 1), N = cell(ix, j);
          const double north = rho[S] + 0.5 * hy_ * sy_[S];
          const double south = rho[N] - 0.5 * hy_ * sy_[N];
          fy_[f] = VelocityField::plus(u.uy[f]) * north + VelocityField::minus(u.uy[f]) * south;
        }
      }
    }

    // Scale the outgoing fluxes of any cell that would be over-drained.
    const double lx = dt / hx_, ly = dt / hy_;
    long limited = 0;
    for (int ix = 0; ix < nx_; ++ix) {
      for (int iy = 0; iy < ny_; ++iy) {
        const std::size_t c = cell(ix, iy);
        double outflow = lx * (std::max(fx_[static_cast<std::size_t>(ix + 1) * ny_ + iy], 0.0) +
                               std::max(-fx_[static_cast<std::size_t>(ix) * ny_ + iy], 0.0));
        if (dim_ == 2) {
          outflow += ly * (std::max(fy_[static_cast<std::size_t>(ix) * (ny_ + 1) + iy + 1], 0.0) +
                           std::max(-fy_[static_cast<std::size_t>(ix) * (ny_ + 1) + iy], 0.0));
        }
        scale_[c] = 1.0;
        if (outflow > rho[c]) {
          scale_[c] = outflow > 0.0 ? std::max(rho[c], 0.0) / outflow : 0.0;
          ++limited;
        }
      }
    }
    if (limited > 0) {
      for (int i = 1; i < nx_; ++i) {
        for (int iy = 0; iy < ny_; ++iy) {
          double& f = fx_[static_cast<std::size_t>(i) * ny_ + iy];
          f *= scale_[cell(f > 0.0 ? i - 1 : i, iy)];
        }
      }
      if (dim_ == 2) {
        for (int ix = 0; ix < nx_; ++ix) {
          for (int j = 1; j < ny_; ++j) {
            double& f = fy_[static_cast<std::size_t>(ix) * (ny_ + 1) + j];
            f *= scale_[cell(ix, f > 0.0 ? j - 1 : j)];
          }
        }
      }
    }

    out.resize(cells());
    for (int ix = 0; ix < nx_; ++ix) {
      for (int iy = 0; iy < ny_; ++iy) {
        const std::size_t c = cell(ix, iy);
        double v = rho[c] - lx * (fx_[static_cast<std::size_t>(ix + 1) * ny_ + iy] -
                                  fx_[static_cast<std::size_t>(ix) * ny_ + iy]);
        if (dim_ == 2) {
          v -= ly * (fy_[static_cast<std::size_t>(ix) * (ny_ + 1) + iy + 1] -
                     fy_[static_cast<std::size_t>(ix) * (ny_ + 1) + iy]);
        }
        // Rounding can leave -1e-30 in a fully drained cell.
        out[c] = v < 0.0 && v > -1e-14 * rho[c] ? 0.0 : v;
      }
    }
    return limited;
  }

 private:
  const Grid& grid_;
  DiffusionLaw diffusion_;
  double theta_;
  int dim_, Nx_, Ny_, nx_, ny_, kx_, ky_;
  double hx_, hy_;
  std::vector<double> V_, wtab_, xi_, conv_, sx_, sy_, scale_, fx_, fy_;
};

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double cfl_cells(const VelocityField& u, double hx, double hy, double safety,
                 const std::vector<double>* rho, double floor) {
  double threshold = -1.0;
  if (rho && floor > 0.0) {
    threshold = floor * *std::max_element(rho->begin(), rho->end());
  }
  const int nx = u.nx, ny = u.ny;
  const bool two_d = !u.uy.empty();
  double worst = 0.0;
  for (int ix = 0; ix < nx; ++ix) {
    for (int iy = 0; iy < ny; ++iy) {
      if (rho && (*rho)[static_cast<std::size_t>(ix) * ny + iy] <= threshold) continue;
      const double a = std::max(VelocityField::plus(u.ux[static_cast<std::size_t>(ix + 1) * ny + iy]),
                                -VelocityField::minus(u.ux[static_cast<std::size_t>(ix) * ny + iy]));
      double rate = a / hx;
      if (two_d) {
        const std::size_t f = static_cast<std::size_t>(ix) * (ny + 1) + iy;
        const double b = std::max(VelocityField::plus(u.uy[f + 1]), -VelocityField::minus(u.uy[f]));
        rate += b / hy;
      }
      worst = std::max(worst, rate);
    }
  }
  if (worst == 0.0) return std::numeric_limits<double>::infinity();
  return safety / (2.0 * worst);
}

double diffusive_cells(const DiffusionLaw& diffusion, const std::vector<double>& rho, double hx,
                       double hy, bool two_d, double safety, double floor) {
  const double top = rho.empty() ? 0.0 : *std::max_element(rho.begin(), rho.end());
  const double threshold = floor * top;
  double d = 0.0;
  for (double r : rho) {
    if (r > threshold) d = std::max(d, diffusion.diffusivity(r));
  }
  if (d == 0.0) return std::numeric_limits<double>::infinity();
  const double inv = 1.0 / (hx * hx) + (two_d ? 1.0 / (hy * hy) : 0.0);
  return safety / (2.0 * d * inv);
}

}  // namespace

VelocityField velocity_from_state(std::span<const double> rho_slice, const ModelSpec& model,
                                  const Grid& grid) {
  if (rho_slice.size() != grid.nodes_per_slice()) {
    throw InvalidParameter("density slice does not match the grid");
  }
  Scheme scheme(model, grid, 1.5);
  std::vector<double> rho;
  scheme.load(rho_slice, rho);
  if (!all_finite(rho)) throw SolverDiverged("non-finite density", 0);
  VelocityField u;
  scheme.velocity(rho, u);
  return u;
}

double cfl_timestep(const VelocityField& u, const Grid& grid, double safety,
                    std::span<const double> rho_slice, double donor_floor) {
  const double hy = grid.dim() == 2 ? grid.step(1) : 1.0;
  if (rho_slice.empty()) return cfl_cells(u, grid.step(0), hy, safety, nullptr, 0.0);
  Scheme scheme(ModelSpec{}, grid, 1.5);
  std::vector<double> rho;
  scheme.load(rho_slice, rho);
  return cfl_cells(u, grid.step(0), hy, safety, &rho, donor_floor);
}

double diffusive_timestep(const DiffusionLaw& diffusion, std::span<const double> rho_slice,
                          const Grid& grid, double safety, double donor_floor) {
  Scheme scheme(ModelSpec{}, grid, 1.5);
  std::vector<double> rho;
  scheme.load(rho_slice, rho);
  return diffusive_cells(diffusion, rho, grid.step(0), grid.dim() == 2 ? grid.step(1) : 1.0,
                         grid.dim() == 2, safety, donor_floor);
}

DensityTrajectory solve(const ModelSpec& model, std::span<const double> rho0,
                        const SolverConfig& config, SolveStats* stats) {
  config.validate();
  const Grid& grid = config.grid;
  if (rho0.size() != grid.nodes_per_slice()) {
    throw InvalidParameter("initial density does not match the solver grid");
  }
  for (std::size_t i = 0; i < rho0.size(); ++i) {
    if (!(rho0[i] >= 0.0) || !std::isfinite(rho0[i])) {
      throw InvalidInput("initial density must be finite and non-negative");
    }
  }

  Scheme scheme(model, grid, config.theta);
  const int stride = config.snapshot_stride;
  const int snaps = grid.steps() / stride;
  const Grid out_grid = grid.with_time(grid.dt() * stride, snaps);
  DensityTrajectory out = DensityTrajectory::zeros(out_grid);
  out.provenance().model_hash = model.hash();
  out.provenance().stages = {"simulate"};

  const double hx = grid.step(0);
  const double hy = grid.dim() == 2 ? grid.step(1) : 1.0;
  const bool two_d = grid.dim() == 2;
  std::vector<double> rho, s1, s2, tmp;
  scheme.load(rho0, rho);
  scheme.store(rho, out.slice(0));

  SolveStats st;
  st.min_dt = std::numeric_limits<double>::infinity();
  VelocityField u;

  auto check = [&](const std::vector<double>& v, long step) {
    if (!all_finite(v)) throw SolverDiverged("non-finite density", step);
  };

  // have_u: u already holds the velocity of rho (adaptive mode computed it for the step size).
  auto rk3 = [&](double dt, long step, bool fixed, bool have_u) {
    auto stage = [&](const std::vector<double>& in, std::vector<double>& res) {
      if (!have_u) {
        scheme.velocity(in, u);
        if (!all_finite(u.ux) || !all_finite(u.uy)) throw SolverDiverged("non-finite velocity", step);
      }
      have_u = false;
      if (fixed) {
        const double bound =
            std::min(cfl_cells(u, hx, hy, 1.0, &in, config.donor_floor),
                     diffusive_cells(model.diffusion, in, hx, hy, two_d, 1.0, config.donor_floor));
        if (dt > bound * (1.0 + 1e-12)) {
          throw PositivityLoss("fixed step " + std::to_string(dt) + " exceeds the stability bound " +
                               std::to_string(bound),
                               step);
        }
      }
      st.limited_fluxes += scheme.euler(in, u, dt, res);
    };
    stage(rho, s1);
    stage(s1, tmp);
    for (std::size_t c = 0; c < rho.size(); ++c) s2[c] = 0.75 * rho[c] + 0.25 * tmp[c];
    stage(s2, tmp);
    for (std::size_t c = 0; c < rho.size(); ++c) rho[c] = rho[c] / 3.0 + 2.0 / 3.0 * tmp[c];
    check(rho, step);
    ++st.substeps;
    st.min_dt = std::min(st.min_dt, dt);
    st.max_dt = std::max(st.max_dt, dt);
    if (st.substeps > config.max_substeps) {
      throw SolverDiverged("substep budget exhausted", step);
    }
  };

  s2.resize(rho.size());
  for (long step = 1; step <= grid.steps(); ++step) {
    if (config.stepping == SolverConfig::Stepping::fixed) {
      rk3(grid.dt(), step, true, false);
    } else {
      double remaining = grid.dt();
      while (remaining > 0.0) {
        scheme.velocity(rho, u);
        if (!all_finite(u.ux) || !all_finite(u.uy)) throw SolverDiverged("non-finite velocity", step);
        double dt = std::min(
            cfl_cells(u, hx, hy, config.cfl_safety, &rho, config.donor_floor),
            diffusive_cells(model.diffusion, rho, hx, hy, two_d, config.cfl_safety, config.donor_floor));
        if (dt >= remaining * (1.0 - 1e-9)) {
          dt = remaining;
        } else if (dt > 0.5 * remaining) {
          dt = 0.5 * remaining;
        }
        rk3(dt, step, false, true);
        remaining = dt == remaining ? 0.0 : remaining - dt;
      }
    }
    if (step % stride == 0) {
      const int snap = static_cast<int>(step / stride);
      scheme.store(rho, out.slice(snap));
      if (config.progress) config.progress(snap, snaps);
    }
  }
  if (stats) *stats = st;
  return out;
}

}  // namespace aggdiff
