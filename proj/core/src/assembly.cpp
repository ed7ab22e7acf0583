#include "aggdiff/assembly.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "aggdiff/errors.hpp"

namespace aggdiff {
namespace {

struct Node {
  std::size_t flat;
  int mx, my;
  double rho;
};

std::vector<Node> support(const DensityTrajectory& traj, int l) {
  const Grid& g = traj.grid();
  auto s = traj.slice(l);
  std::vector<Node> out;
  for (int mx = -g.half_count(0); mx <= g.half_count(0); ++mx) {
    for (int my = -g.half_count(1); my <= g.half_count(1); ++my) {
      const std::size_t f = g.flat(mx, my);
      if (s[f] != 0.0) out.push_back({f, mx, my, s[f]});
    }
  }
  return out;
}

/// grad Psi_i and Psi_i sampled on the offset lattice [-2M, 2M]^d, laid out [offset][i].
class OffsetTables {
 public:
  OffsetTables(const std::vector<RadialKernel>& kernels, const Grid& grid, bool with_potential)
      : n_(kernels.size()), dim_(grid.dim()) {
    hx_ = 2 * grid.half_count(0);
    hy_ = dim_ == 2 ? 2 * grid.half_count(1) : 0;
    const std::size_t count = static_cast<std::size_t>(2 * hx_ + 1) * (2 * hy_ + 1);
    gx_.assign(count * n_, 0.0);
    if (dim_ == 2) gy_.assign(count * n_, 0.0);
    if (with_potential) pot_.assign(count * n_, 0.0);
    for (int dx = -hx_; dx <= hx_; ++dx) {
      for (int dy = -hy_; dy <= hy_; ++dy) {
        const double x = grid.x(dx), y = dim_ == 2 ? grid.y(dy) : 0.0;
        const std::size_t o = offset(dx, dy) * n_;
        for (std::size_t i = 0; i < n_; ++i) {
          double gx, gy;
          kernels[i].gradient(dim_, x, y, gx, gy);
          gx_[o + i] = gx;
          if (dim_ == 2) gy_[o + i] = gy;
          if (with_potential) pot_[o + i] = kernels[i].potential(std::hypot(x, y));
        }
      }
    }
  }

  std::size_t n() const { return n_; }
  int half(int axis) const { return axis == 0 ? hx_ : hy_; }
  std::size_t offset(int dx, int dy) const {
    return static_cast<std::size_t>(dx + hx_) * (2 * hy_ + 1) + static_cast<std::size_t>(dy + hy_);
  }
  const double* gx(int dx, int dy) const { return &gx_[offset(dx, dy) * n_]; }
  const double* gy(int dx, int dy) const { return &gy_[offset(dx, dy) * n_]; }
  const double* pot(int dx, int dy) const { return &pot_[offset(dx, dy) * n_]; }

  /// out[i] = sum_s table_i(x - x_s) rho_s dV for one target node.
  void convolve(const std::vector<Node>& src, int mx, int my, double dV, int which,
                std::vector<double>& out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& s : src) {
      const double* t = which == 0 ? gx(mx - s.mx, my - s.my)
                        : which == 1 ? gy(mx - s.mx, my - s.my)
                                     : pot(mx - s.mx, my - s.my);
      for (std::size_t i = 0; i < n_; ++i) out[i] += t[i] * s.rho;
    }
    for (auto& v : out) v *= dV;
  }

 private:
  std::size_t n_;
  int dim_, hx_, hy_;
  std::vector<double> gx_, gy_, pot_;
};

std::vector<RadialKernel> elements_of(const BasisSet& basis) {
  std::vector<RadialKernel> k;
  for (std::size_t i = 0; i < basis.size(); ++i) k.push_back(basis.element(i));
  return k;
}

void check_form(const BasisSet& basis, const Grid& grid) {
  const KernelForm want = grid.dim() == 1 ? KernelForm::kernel : KernelForm::kernel_over_r;
  if (basis.form() != want) {
    throw InvalidParameter("basis form " + to_string(basis.form()) + " does not suit a " +
                           std::to_string(grid.dim()) + "D grid");
  }
}

void check_window(const Grid& g) {
  if (g.steps() < 2) throw InvalidParameter("assembly needs at least three time slices");
}

// Forward difference along an axis with the closure -v_M/h at the top node.
void forward_diff(std::span<const double> v, const Grid& g, int axis, std::span<double> out) {
  const int M0 = g.half_count(0), M1 = g.half_count(1);
  const double h = g.step(axis);
  const int Ma = axis == 0 ? M0 : M1;
  for (int mx = -M0; mx <= M0; ++mx) {
    for (int my = -M1; my <= M1; ++my) {
      const int m = axis == 0 ? mx : my;
      const std::size_t f = g.flat(mx, my);
      if (m == Ma) {
        out[f] = -v[f] / h;
      } else {
        const std::size_t f1 = axis == 0 ? g.flat(mx + 1, my) : g.flat(mx, my + 1);
        out[f] = (v[f1] - v[f]) / h;
      }
    }
  }
}

void flux_slice(std::span<const double> rho, const Grid& g, const ModelSpec& model, int axis,
                std::vector<double>& hp, std::vector<double>& d, std::span<double> out) {
  const std::size_t n = g.nodes_per_slice();
  hp.resize(n);
  d.resize(n);
  for (std::size_t i = 0; i < n; ++i) hp[i] = model.diffusion.derivative(rho[i]);
  forward_diff(hp, g, axis, d);
  for (int mx = -g.half_count(0); mx <= g.half_count(0); ++mx) {
    for (int my = -g.half_count(1); my <= g.half_count(1); ++my) {
      const std::size_t f = g.flat(mx, my);
      double gx, gy;
      model.confinement.gradient(g.x(mx), g.dim() == 2 ? g.y(my) : 0.0, gx, gy);
      out[f] = rho[f] * (d[f] + (axis == 0 ? gx : gy));
    }
  }
}

std::vector<Field> convolve_all(const std::vector<RadialKernel>& kernels,
                                const DensityTrajectory& traj, int which) {
  const Grid& g = traj.grid();
  OffsetTables tab(kernels, g, which == 2);
  std::vector<Field> out(kernels.size());
  for (auto& f : out) {
    f.grid = g;
    f.slices = g.time_slices();
    f.values.assign(static_cast<std::size_t>(f.slices) * g.nodes_per_slice(), 0.0);
  }
  std::vector<double> buf(kernels.size());
  for (int l = 0; l <= g.steps(); ++l) {
    const auto src = support(traj, l);
    for (int mx = -g.half_count(0); mx <= g.half_count(0); ++mx) {
      for (int my = -g.half_count(1); my <= g.half_count(1); ++my) {
        tab.convolve(src, mx, my, g.cell_volume(), which, buf);
        for (std::size_t i = 0; i < kernels.size(); ++i) out[i].at(l, g.flat(mx, my)) = buf[i];
      }
    }
  }
  return out;
}

}  // namespace

TimeWindow TimeWindow::of(const Grid& grid) {
  check_window(grid);
  TimeWindow w;
  w.first = 1;
  w.last = grid.steps() - 1;
  w.horizon = (w.last - w.first + 1) * grid.dt();
  return w;
}

Field fd_time(const DensityTrajectory& traj) {
  const Grid& g = traj.grid();
  if (g.steps() < 1) throw InvalidParameter("time difference needs L >= 1");
  Field f{g, g.steps(), std::vector<double>(static_cast<std::size_t>(g.steps()) * g.nodes_per_slice())};
  for (int l = 0; l < g.steps(); ++l) {
    auto a = traj.slice(l), b = traj.slice(l + 1);
    for (std::size_t i = 0; i < a.size(); ++i) f.at(l, i) = (b[i] - a[i]) / g.dt();
  }
  return f;
}

Field fd_space(const DensityTrajectory& traj, int axis) {
  const Grid& g = traj.grid();
  if (axis < 0 || axis >= g.dim()) throw InvalidParameter("axis out of range");
  if (g.half_count(axis) < 1) throw InvalidParameter("space difference needs M >= 1");
  const std::size_t n = g.nodes_per_slice();
  Field f{g, g.time_slices(), std::vector<double>(static_cast<std::size_t>(g.time_slices()) * n)};
  for (int l = 0; l <= g.steps(); ++l) {
    forward_diff(traj.slice(l), g, axis, std::span<double>(&f.values[static_cast<std::size_t>(l) * n], n));
  }
  return f;
}

std::vector<Field> conv_R(const BasisSet& basis, const DensityTrajectory& traj) {
  check_form(basis, traj.grid());
  return convolve_all(elements_of(basis), traj, 2);
}

std::vector<Field> conv_C(const BasisSet& basis, const DensityTrajectory& traj, int axis) {
  check_form(basis, traj.grid());
  if (axis < 0 || axis >= traj.grid().dim()) throw InvalidParameter("axis out of range");
  return convolve_all(elements_of(basis), traj, axis);
}

Field flux_F(const DensityTrajectory& traj, const ModelSpec& model, int axis) {
  const Grid& g = traj.grid();
  if (axis < 0 || axis >= g.dim()) throw InvalidParameter("axis out of range");
  const std::size_t n = g.nodes_per_slice();
  Field f{g, g.time_slices(), std::vector<double>(static_cast<std::size_t>(g.time_slices()) * n)};
  std::vector<double> hp, d;
  for (int l = 0; l <= g.steps(); ++l) {
    flux_slice(traj.slice(l), g, model, axis, hp, d,
               std::span<double>(&f.values[static_cast<std::size_t>(l) * n], n));
  }
  return f;
}

Eigen::MatrixXd force_gram(const std::vector<RadialKernel>& kernels, const DensityTrajectory& traj) {
  const Grid& g = traj.grid();
  const TimeWindow w = TimeWindow::of(g);
  const std::size_t n = kernels.size();
  OffsetTables tab(kernels, g, false);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<double> cx(n), cy(n);
  const double dV = g.cell_volume();
  for (int l = w.first; l <= w.last; ++l) {
    const auto src = support(traj, l);
    for (const auto& node : src) {
      tab.convolve(src, node.mx, node.my, dV, 0, cx);
      if (g.dim() == 2) tab.convolve(src, node.mx, node.my, dV, 1, cy);
      const double wgt = node.rho * dV * g.dt();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
          double cc = cx[i] * cx[j];
          if (g.dim() == 2) cc += cy[i] * cy[j];
          A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += cc * wgt;
        }
      }
    }
  }
  A /= w.horizon;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) A(i, j) = A(j, i);
  }
  return A;
}

Eigen::VectorXd assemble_b(const BasisSet& basis, const DensityTrajectory& traj,
                           const ModelSpec& model) {
  const Grid& g = traj.grid();
  check_form(basis, g);
  const TimeWindow w = TimeWindow::of(g);
  const std::size_t n = basis.size();
  OffsetTables tab(elements_of(basis), g, true);
  const std::size_t nodes = g.nodes_per_slice();
  const double dV = g.cell_volume();
  std::vector<double> acc(n, 0.0), buf(n), hp, d, Fx(nodes), Fy(nodes);

  for (int l = w.first; l <= w.last; ++l) {
    const auto src = support(traj, l);
    auto now = traj.slice(l), next = traj.slice(l + 1);
    flux_slice(now, g, model, 0, hp, d, Fx);
    if (g.dim() == 2) flux_slice(now, g, model, 1, hp, d, Fy);
    // C . F vanishes where rho does.
    for (const auto& node : src) {
      tab.convolve(src, node.mx, node.my, dV, 0, buf);
      for (std::size_t i = 0; i < n; ++i) acc[i] += buf[i] * Fx[node.flat] * dV * g.dt();
      if (g.dim() == 2) {
        tab.convolve(src, node.mx, node.my, dV, 1, buf);
        for (std::size_t i = 0; i < n; ++i) acc[i] += buf[i] * Fy[node.flat] * dV * g.dt();
      }
    }
    for (int mx = -g.half_count(0); mx <= g.half_count(0); ++mx) {
      for (int my = -g.half_count(1); my <= g.half_count(1); ++my) {
        const std::size_t f = g.flat(mx, my);
        const double dt_rho = (next[f] - now[f]) / g.dt();
        if (dt_rho == 0.0) continue;
        tab.convolve(src, mx, my, dV, 2, buf);
        for (std::size_t i = 0; i < n; ++i) acc[i] += dt_rho * buf[i] * dV * g.dt();
      }
    }
  }
  Eigen::VectorXd b(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) b(static_cast<Eigen::Index>(i)) = -acc[i] / w.horizon;
  return b;
}

LinearSystem assemble_direct(const BasisSet& basis, const DensityTrajectory& traj,
                             const ModelSpec& model) {
  check_form(basis, traj.grid());
  const TimeWindow w = TimeWindow::of(traj.grid());
  LinearSystem sys;
  sys.A = force_gram(elements_of(basis), traj);
  sys.b = assemble_b(basis, traj, model);
  sys.path = LinearSystem::Path::direct;
  sys.horizon = w.horizon;
  sys.first_slice = w.first;
  sys.last_slice = w.last;
  sys.basis_hash = basis.hash();
  sys.grid = traj.grid().to_json();
  return sys;
}

GKernel assemble_G(const DensityTrajectory& traj, std::size_t budget_bytes) {
  const Grid& g = traj.grid();
  if (g.dim() != 1) throw InvalidParameter("the G-kernel path is 1D only; use the direct path");
  const TimeWindow w = TimeWindow::of(g);
  GKernel G;
  G.half = 2 * g.half_count(0);
  const double bytes = static_cast<double>(G.width()) * static_cast<double>(G.width()) * sizeof(double);
  if (bytes > static_cast<double>(budget_bytes)) {
    throw BudgetExceeded("G table needs " + std::to_string(bytes / (1 << 20)) +
                         " MiB; use the direct assembly path");
  }
  G.values.assign(G.width() * G.width(), 0.0);
  const double scale = g.step(0) * g.dt();
  for (int l = w.first; l <= w.last; ++l) {
    const auto S = support(traj, l);
    for (const auto& k : S) {
      for (std::size_t a = 0; a < S.size(); ++a) {
        const int p = k.mx - S[a].mx;
        const double ra = S[a].rho * k.rho * scale;
        G.values[static_cast<std::size_t>(p + G.half) * G.width() + (p + G.half)] += ra * S[a].rho;
        for (std::size_t c = a + 1; c < S.size(); ++c) {
          const int q = k.mx - S[c].mx;
          const double v = ra * S[c].rho;
          G.values[static_cast<std::size_t>(p + G.half) * G.width() + (q + G.half)] += v;
          G.values[static_cast<std::size_t>(q + G.half) * G.width() + (p + G.half)] += v;
        }
      }
    }
  }
  return G;
}

LinearSystem assemble_via_G(const BasisSet& basis, const GKernel& G, const DensityTrajectory& traj,
                            const ModelSpec& model) {
  const Grid& g = traj.grid();
  check_form(basis, g);
  if (G.half != 2 * g.half_count(0)) throw InvalidParameter("G kernel does not match the grid");
  const TimeWindow w = TimeWindow::of(g);
  const auto n = static_cast<Eigen::Index>(basis.size());
  const auto width = static_cast<Eigen::Index>(G.width());
  Eigen::MatrixXd gvals(width, n);
  for (Eigen::Index p = 0; p < width; ++p) {
    const double x = g.x(static_cast<int>(p) - G.half);
    for (Eigen::Index i = 0; i < n; ++i) {
      double gx, gy;
      basis.element(static_cast<std::size_t>(i)).gradient(1, x, 0.0, gx, gy);
      gvals(p, i) = gx;
    }
  }
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> Gm(
      G.values.data(), width, width);
  const double h2 = g.step(0) * g.step(0);
  Eigen::MatrixXd A = gvals.transpose() * (Gm * gvals) * (h2 / w.horizon);
  A = 0.5 * (A + A.transpose()).eval();

  LinearSystem sys;
  sys.A = std::move(A);
  sys.b = assemble_b(basis, traj, model);
  sys.path = LinearSystem::Path::via_G;
  sys.horizon = w.horizon;
  sys.first_slice = w.first;
  sys.last_slice = w.last;
  sys.basis_hash = basis.hash();
  sys.grid = g.to_json();
  return sys;
}

nlohmann::json LinearSystem::to_json() const {
  return {{"n", size()},
          {"path", path == Path::direct ? "direct" : "via-G"},
          {"horizon", horizon},
          {"first_slice", first_slice},
          {"last_slice", last_slice},
          {"basis_hash", basis_hash},
          {"grid", grid}};
}

namespace {
constexpr char kSysMagic[] = "AGGDIFF-SYS-1\n";

void put_u64(std::ostream& os, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(is.get())) << (8 * i);
  return v;
}
void put_f64(std::ostream& os, double d) { put_u64(os, std::bit_cast<std::uint64_t>(d)); }
double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }
}  // namespace

void write_system(const LinearSystem& sys, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  const std::string header = sys.to_json().dump();
  os.write(kSysMagic, sizeof(kSysMagic) - 1);
  put_u64(os, header.size());
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (Eigen::Index j = 0; j < sys.A.cols(); ++j) {
    for (Eigen::Index i = 0; i < sys.A.rows(); ++i) put_f64(os, sys.A(i, j));
  }
  for (Eigen::Index i = 0; i < sys.b.size(); ++i) put_f64(os, sys.b(i));
  if (!os) throw FormatError("write failed for " + path.string());
}

LinearSystem read_system(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  std::string magic(sizeof(kSysMagic) - 1, '\0');
  is.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  if (magic != kSysMagic) throw FormatError(path.string() + " is not a system file");
  const auto len = get_u64(is);
  if (len > (1u << 26)) throw FormatError("implausible header length");
  std::string header(len, '\0');
  is.read(header.data(), static_cast<std::streamsize>(len));
  const auto j = nlohmann::json::parse(header);
  LinearSystem sys;
  const auto n = j.at("n").get<Eigen::Index>();
  sys.path = j.at("path").get<std::string>() == "direct" ? LinearSystem::Path::direct
                                                         : LinearSystem::Path::via_G;
  sys.horizon = j.at("horizon").get<double>();
  sys.first_slice = j.at("first_slice").get<int>();
  sys.last_slice = j.at("last_slice").get<int>();
  sys.basis_hash = j.at("basis_hash").get<std::string>();
  sys.grid = j.at("grid");
  sys.A.resize(n, n);
  sys.b.resize(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = 0; r < n; ++r) sys.A(r, c) = get_f64(is);
  }
  for (Eigen::Index i = 0; i < n; ++i) sys.b(i) = get_f64(is);
  if (!is) throw FormatError("truncated system file " + path.string());
  return sys;
}

}  // namespace aggdiff
