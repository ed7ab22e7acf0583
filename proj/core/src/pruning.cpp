#include "aggdiff/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>

#include "aggdiff/errors.hpp"
#include "aggdiff/sparse_solvers.hpp"

namespace aggdiff {
namespace {

int integer_ratio(double coarse, double fine, const char* what) {
  const double q = coarse / fine;
  const long r = std::lround(q);
  if (r < 1 || std::abs(q - static_cast<double>(r)) > 1e-9 * q) {
    throw IndexAlignmentError(std::string(what) + " of the fine mesh must divide the data step");
  }
  return static_cast<int>(r);
}

std::string subset_label(const std::vector<int>& s) {
  std::string out = "{";
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k) out += ",";
    out += std::to_string(s[k] + 1);
  }
  return out + "}";
}

// Lexicographic order on subsets with size first.
bool subset_less(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

}  // namespace

std::vector<std::vector<int>> enumerate_subsets(const std::vector<int>& I, std::size_t guard) {
  if (I.size() > guard) {
    throw BudgetExceeded("support of size " + std::to_string(I.size()) +
                         " exceeds the subset enumeration guard " + std::to_string(guard));
  }
  std::vector<int> sorted = I;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::vector<int>> out;
  const std::size_t n = sorted.size();
  for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
    std::vector<int> s;
    for (std::size_t k = 0; k < n; ++k) {
      if (mask & (std::size_t{1} << k)) s.push_back(sorted[k]);
    }
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(), subset_less);
  return out;
}

std::vector<std::size_t> cluster_candidates(const std::vector<PruningRow>& rows, double tau_rel) {
  if (rows.empty()) throw InvalidParameter("cluster_candidates needs at least one row");
  if (tau_rel < 0.0) throw InvalidParameter("tau_rel must be non-negative");
  double lo = rows.front().re, hi = rows.front().re;
  for (const auto& r : rows) {
    lo = std::min(lo, r.re);
    hi = std::max(hi, r.re);
  }
  const double cut = lo + tau_rel * std::max(std::abs(lo), hi - lo);
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].re <= cut) out.push_back(k);
  }
  return out;
}

double tee(const ModelSpec& model, const BasisSet& basis, const Eigen::VectorXd& c,
           const DensityTrajectory& data, const TeeConfig& config, std::string* diagnostic) {
  const Grid& g = data.grid();
  if (config.horizon_steps < 1 || config.horizon_steps > g.steps()) {
    throw InvalidParameter("TEE horizon must cover between 1 and L data steps");
  }
  const int rx = integer_ratio(g.step(0), config.fine_dx, "space step");
  const int rt = integer_ratio(g.dt(), config.fine_dt, "time step");

  const double T_hat = config.horizon_steps * g.dt();
  const Grid fine = g.dim() == 1
                        ? Grid::make_1d(g.half_width(0), config.fine_dx, config.fine_dt, T_hat)
                        : Grid::make_2d(g.half_width(0), g.half_width(1), config.fine_dx,
                                        config.fine_dx * g.step(1) / g.step(0), config.fine_dt, T_hat);
  const Grid fine_t = fine.with_time(config.fine_dt, config.horizon_steps * rt);

  // Clipped initial slice, (bi)linearly interpolated onto the fine nodes.
  auto init = data.slice(0);
  auto sample = [&](int mx, int my) {
    if (std::abs(mx) > g.half_count(0) || std::abs(my) > g.half_count(1)) return 0.0;
    return std::max(init[g.flat(mx, my)], 0.0);
  };
  std::vector<double> rho0(fine_t.nodes_per_slice(), 0.0);
  const int ry = g.dim() == 2 ? rx : 1;
  for (int jx = -fine_t.active_half_count(0); jx <= fine_t.active_half_count(0); ++jx) {
    for (int jy = -fine_t.active_half_count(1); jy <= fine_t.active_half_count(1); ++jy) {
      const int cx = static_cast<int>(std::floor(static_cast<double>(jx) / rx));
      const int cy = static_cast<int>(std::floor(static_cast<double>(jy) / ry));
      const double fx = static_cast<double>(jx - cx * rx) / rx;
      const double fy = static_cast<double>(jy - cy * ry) / ry;
      double v = (1 - fx) * sample(cx, cy) + fx * sample(cx + 1, cy);
      if (g.dim() == 2) {
        v = (1 - fy) * v + fy * ((1 - fx) * sample(cx, cy + 1) + fx * sample(cx + 1, cy + 1));
      }
      rho0[fine_t.flat(jx, jy)] = v;
    }
  }

  ModelSpec m = model;
  m.interaction = BasisExpansion{std::make_shared<const BasisSet>(basis),
                                 std::vector<double>(c.data(), c.data() + c.size())};
  SolverConfig sc;
  sc.grid = fine_t;
  sc.cfl_safety = config.cfl_safety;
  sc.theta = config.theta;
  sc.snapshot_stride = rt;
  sc.stepping = SolverConfig::Stepping::adaptive;
  sc.max_substeps = config.max_substeps;

  std::optional<DensityTrajectory> sim;
  try {
    sim = solve(m, rho0, sc);
  } catch (const SolverDiverged& e) {
    if (diagnostic) *diagnostic = e.what();
    return std::numeric_limits<double>::infinity();
  } catch (const PositivityLoss& e) {
    if (diagnostic) *diagnostic = e.what();
    return std::numeric_limits<double>::infinity();
  }

  double sum = 0.0;
  const Grid& sg = sim->grid();
  for (int l = 1; l <= config.horizon_steps; ++l) {
    auto d = data.slice(l);
    auto s = sim->slice(l);
    for (int mx = -g.active_half_count(0); mx <= g.active_half_count(0); ++mx) {
      for (int my = -g.active_half_count(1); my <= g.active_half_count(1); ++my) {
        const int fx = mx * rx, fy = my * ry;
        const double hat = std::abs(fx) <= sg.half_count(0) && std::abs(fy) <= sg.half_count(1)
                               ? s[sg.flat(fx, fy)]
                               : 0.0;
        const double diff = hat - d[g.flat(mx, my)];
        sum += diff * diff;
      }
    }
  }
  const double out = std::sqrt(sum * g.cell_volume() * g.dt());
  return std::isfinite(out) ? out : std::numeric_limits<double>::infinity();
}

PruningReport prune(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const std::vector<int>& I,
                    const BasisSet& basis, const ModelSpec& model, const DensityTrajectory& data,
                    const PruningConfig& config) {
  if (I.empty()) throw InvalidParameter("pruning needs a nonempty support");
  PruningReport rep;
  rep.tau_rel = config.tau_rel;
  rep.tee = config.tee;
  rep.horizon = config.tee.horizon_steps * data.grid().dt();

  for (auto& s : enumerate_subsets(I)) {
    PruningRow row;
    row.c = restricted_ls(A, b, s, config.rel_tol);
    row.re = residual_error(A, b, row.c);
    row.subset = std::move(s);
    rep.rows.push_back(std::move(row));
  }
  std::vector<std::size_t> cluster;
  if (config.tee_all) {
    cluster.resize(rep.rows.size());
    for (std::size_t k = 0; k < cluster.size(); ++k) cluster[k] = k;
  } else {
    cluster = cluster_candidates(rep.rows, config.tau_rel);
  }

  if (rep.rows.size() == 1) {
    rep.rows[0].in_cluster = true;
    rep.chosen = 0;
    return rep;
  }

  constexpr double kTieTol = 1e-9;
  std::optional<std::size_t> best;
  for (std::size_t k : cluster) {
    auto& row = rep.rows[k];
    row.in_cluster = true;
    row.tee = tee(model, basis, row.c, data, config.tee);
    if (!best) {
      best = k;
      continue;
    }
    const auto& cur = rep.rows[*best];
    const double a = *row.tee, bt = *cur.tee;
    // Rows come sparsest-first, so a tie keeps the incumbent.
    if (a < bt - kTieTol * std::max(1.0, std::abs(bt))) best = k;
  }
  rep.chosen = *best;
  return rep;
}

nlohmann::json PruningReport::to_json() const {
  nlohmann::json rows_j = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j{{"subset", subset_label(r.subset)},
                     {"coefficients", std::vector<double>(r.c.data(), r.c.data() + r.c.size())},
                     {"re", r.re},
                     {"in_cluster", r.in_cluster}};
    if (r.tee) {
      j["tee"] = std::isfinite(*r.tee) ? nlohmann::json(*r.tee) : nlohmann::json("inf");
    } else {
      j["tee"] = nullptr;
    }
    rows_j.push_back(std::move(j));
  }
  return {{"rows", rows_j},
          {"chosen", subset_label(best().subset)},
          {"tau_rel", tau_rel},
          {"fine_dx", tee.fine_dx},
          {"fine_dt", tee.fine_dt},
          {"horizon", horizon}};
}

void PruningReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open " + path.string());
  os.precision(17);
  os << "subset,coefficients,re,tee,in_cluster,chosen\n";
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    os << '"' << subset_label(r.subset) << "\",\"";
    bool first = true;
    for (int i : r.subset) {
      if (!first) os << ' ';
      os << r.c(i);
      first = false;
    }
    os << "\"," << r.re << ',';
    if (r.tee) os << *r.tee;
    os << ',' << (r.in_cluster ? 1 : 0) << ',' << (k == chosen ? 1 : 0) << '\n';
  }
}

}  // namespace aggdiff
