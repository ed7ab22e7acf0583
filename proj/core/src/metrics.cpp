#include "aggdiff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "aggdiff/assembly.hpp"
#include "aggdiff/errors.hpp"

namespace aggdiff {

double reconstruction_error(const Eigen::VectorXd& c_true, const Eigen::VectorXd& c_hat) {
  if (c_true.size() != c_hat.size()) throw InvalidParameter("coefficient vectors differ in length");
  const double n = c_true.norm();
  if (n == 0.0) throw InvalidParameter("true coefficient vector is zero");
  return (c_true - c_hat).norm() / n;
}

double error_functional(const RadialKernel& W_hat, const RadialKernel& W,
                        const DensityTrajectory& traj) {
  // Both kernels enter linearly, so E = q^T G q with q = (1, -1).
  const Eigen::MatrixXd G = force_gram({W_hat, W}, traj);
  return std::max(0.0, G(0, 0) - 2.0 * G(0, 1) + G(1, 1));
}

namespace {

// Quantile function of a piecewise-constant density (cell [x - h/2, x + h/2) per node).
class Quantiles {
 public:
  Quantiles(std::span<const double> rho, const Grid& g) : h_(g.step(0)) {
    const int M = g.half_count(0);
    double total = 0.0;
    for (int m = -M; m <= M; ++m) {
      const double v = rho[g.flat(m)];
      if (v < 0.0) throw InvalidInput("negative density in Wasserstein distance");
      total += v;
    }
    if (!(total > 0.0)) throw InvalidInput("density has zero mass");
    double acc = 0.0;
    for (int m = -M; m <= M; ++m) {
      const double w = rho[g.flat(m)] / total;
      if (w == 0.0) continue;
      left_.push_back(g.x(m) - 0.5 * h_);
      cdf0_.push_back(acc);
      acc += w;
      mass_.push_back(w);
    }
  }

  double operator()(double q) const {
    auto it = std::upper_bound(cdf0_.begin(), cdf0_.end(), q);
    const std::size_t k = it == cdf0_.begin() ? 0 : static_cast<std::size_t>(it - cdf0_.begin()) - 1;
    const double frac = std::clamp((q - cdf0_[k]) / mass_[k], 0.0, 1.0);
    return left_[k] + frac * h_;
  }

  double total_mass_check() const { return cdf0_.back() + mass_.back(); }

 private:
  double h_;
  std::vector<double> left_, cdf0_, mass_;
};

}  // namespace

double wasserstein2_1d(std::span<const double> rho1, std::span<const double> rho2, const Grid& grid,
                       int quantiles) {
  if (grid.dim() != 1) throw InvalidParameter("wasserstein2_1d needs a 1D grid");
  if (rho1.size() != grid.nodes_per_slice() || rho2.size() != grid.nodes_per_slice()) {
    throw InvalidParameter("density does not match the grid");
  }
  if (quantiles < 1) throw InvalidParameter("quantile count must be positive");
  double m1 = 0.0, m2 = 0.0;
  for (double v : rho1) m1 += v;
  for (double v : rho2) m2 += v;
  if (std::abs(m1 - m2) > 1e-8 * std::max(std::abs(m1), std::abs(m2))) {
    throw InvalidInput("densities carry different mass");
  }
  const Quantiles q1(rho1, grid), q2(rho2, grid);
  double sum = 0.0;
  for (int k = 0; k < quantiles; ++k) {
    const double q = (k + 0.5) / quantiles;
    const double d = q1(q) - q2(q);
    sum += d * d;
  }
  return std::sqrt(sum / quantiles);
}

StabilitySweep stability_sweep(const ModelSpec& model, std::span<const double> rho0,
                               const SolverConfig& solver, const std::vector<double>& epsilons,
                               Perturbation kind) {
  if (solver.grid.dim() != 1) throw InvalidParameter("stability sweep is 1D only");
  const DensityTrajectory ref = solve(model, rho0, solver);
  const RadialKernel W = model.interaction_kernel();
  StabilitySweep out;
  for (double eps : epsilons) {
    ModelSpec pert = model;
    if (kind == Perturbation::interaction) {
      pert.interaction = W.scaled(1.0 + eps);
    } else {
      pert.confinement = model.confinement.scaled(1.0 + eps);
    }
    const DensityTrajectory run = solve(pert, rho0, solver);
    StabilityProbe p;
    p.epsilon = eps;
    // Force mismatch measured along the perturbed trajectory.
    if (kind == Perturbation::interaction) {
      p.error_functional = error_functional(pert.interaction_kernel(), W, run);
    } else {
      // grad V-hat - grad V = eps grad V, weighted by rho-hat.
      const Grid& g = run.grid();
      const TimeWindow w = TimeWindow::of(g);
      double s = 0.0;
      for (int l = w.first; l <= w.last; ++l) {
        auto r = run.slice(l);
        for (int m = -g.half_count(0); m <= g.half_count(0); ++m) {
          const double d = eps * model.confinement.dx(g.x(m));
          s += d * d * r[g.flat(m)] * g.cell_volume() * g.dt();
        }
      }
      p.error_functional = s / w.horizon;
    }
    for (int l = 0; l <= ref.grid().steps(); ++l) {
      const double d = wasserstein2_1d(ref.slice(l), run.slice(l), ref.grid());
      const double d2 = d * d;
      if (l == 0) p.initial_d2_squared = d2;
      p.sup_d2_squared = std::max(p.sup_d2_squared, d2);
      if (l == ref.grid().steps()) p.final_d2_squared = d2;
    }
    out.probes.push_back(p);
  }
  std::vector<double> e, d;
  bool mono = true;
  for (std::size_t k = 0; k < out.probes.size(); ++k) {
    const auto& p = out.probes[k];
    e.push_back(p.error_functional);
    d.push_back(p.final_d2_squared);
    if (p.error_functional > 0.0) {
      out.max_ratio = std::max(out.max_ratio, p.sup_d2_squared / p.error_functional);
    }
    if (k > 0) {
      const auto& q = out.probes[k - 1];
      mono = mono && p.error_functional > q.error_functional && p.sup_d2_squared > q.sup_d2_squared;
    }
  }
  out.monotone = mono;
  out.rank_consistent = out.probes.size() < 2 || spearman(e, d) == 1.0;
  return out;
}

void StabilitySweep::write_csv(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open " + path.string());
  os.precision(17);
  os << "epsilon,error_functional,sup_d2_squared,final_d2_squared\n";
  for (const auto& p : probes) {
    os << p.epsilon << ',' << p.error_functional << ',' << p.sup_d2_squared << ','
       << p.final_d2_squared << '\n';
  }
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw InvalidParameter("spearman needs two equal samples");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t k = 0; k < idx.size();) {
      std::size_t e = k;
      while (e + 1 < idx.size() && v[idx[e + 1]] == v[idx[k]]) ++e;
      const double avg = 0.5 * static_cast<double>(k + e) + 1.0;
      for (std::size_t q = k; q <= e; ++q) r[idx[q]] = avg;
      k = e + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / ra.size();
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / rb.size();
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t k = 0; k < ra.size(); ++k) {
    num += (ra[k] - ma) * (rb[k] - mb);
    da += (ra[k] - ma) * (ra[k] - ma);
    db += (rb[k] - mb) * (rb[k] - mb);
  }
  if (da == 0.0 || db == 0.0) return 0.0;
  return num / std::sqrt(da * db);
}

}  // namespace aggdiff
