#include "aggdiff/grid.hpp"

#include <cmath>
#include <string>

#include "aggdiff/errors.hpp"

namespace aggdiff {
namespace {

// Ratios such as 12 / 0.01 land a few ulps above the integer; snap them.
constexpr double kSnap = 1e-9;

int ceil_ratio(double num, double den) {
  const double q = num / den;
  return static_cast<int>(std::ceil(q - kSnap * std::max(1.0, q)));
}

int floor_ratio(double num, double den) {
  const double q = num / den;
  return static_cast<int>(std::floor(q + kSnap * std::max(1.0, q)));
}

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw InvalidParameter(std::string(name) + " must be strictly positive and finite");
  }
}

}  // namespace

Grid Grid::make_1d(double R, double dx, double dt, double T) {
  require_positive(R, "R");
  require_positive(dx, "dx");
  require_positive(dt, "dt");
  require_positive(T, "T");
  if (dx > 2.0 * R * (1.0 + kSnap)) throw InvalidParameter("dx must not exceed 2R");
  Grid g;
  g.dim_ = 1;
  g.R_ = {R, 0.0};
  g.h_ = {dx, 1.0};
  g.M_ = {ceil_ratio(2.0 * R, dx), 0};
  g.N_ = {floor_ratio(R, dx), 0};
  g.dt_ = dt;
  g.T_ = T;
  g.L_ = floor_ratio(T, dt);
  g.validate();
  return g;
}

Grid Grid::make_2d(double Rx, double Ry, double dx, double dy, double dt, double T) {
  require_positive(Rx, "Rx");
  require_positive(Ry, "Ry");
  require_positive(dx, "dx");
  require_positive(dy, "dy");
  require_positive(dt, "dt");
  require_positive(T, "T");
  if (dx > 2.0 * Rx * (1.0 + kSnap) || dy > 2.0 * Ry * (1.0 + kSnap)) {
    throw InvalidParameter("cell width must not exceed 2R");
  }
  Grid g;
  g.dim_ = 2;
  g.R_ = {Rx, Ry};
  g.h_ = {dx, dy};
  g.M_ = {ceil_ratio(2.0 * Rx, dx), ceil_ratio(2.0 * Ry, dy)};
  g.N_ = {floor_ratio(Rx, dx), floor_ratio(Ry, dy)};
  g.dt_ = dt;
  g.T_ = T;
  g.L_ = floor_ratio(T, dt);
  g.validate();
  return g;
}

void Grid::validate() const {
  for (int a = 0; a < dim_; ++a) {
    if (M_[a] * h_[a] < R_[a] * (1.0 - kSnap)) {
      throw InvalidParameter("stored lattice must reach the domain edge (x_M >= R)");
    }
    if (N_[a] > M_[a]) throw InvalidParameter("active half-count exceeds stored half-count");
  }
  if (L_ < 0) throw InvalidParameter("negative step count");
}

int Grid::index_of(double coordinate, int axis) const {
  return static_cast<int>(std::lround(coordinate / h_[axis]));
}

Grid Grid::coarsened(int cx, int ct) const {
  if (cx < 1 || ct < 1) throw InvalidParameter("downsampling factors must be positive");
  for (int a = 0; a < dim_; ++a) {
    if (M_[a] % cx != 0) {
      throw IndexAlignmentError("spatial factor " + std::to_string(cx) +
                                " does not divide the half node count " +
                                std::to_string(M_[a]));
    }
  }
  if (L_ % ct != 0) {
    throw IndexAlignmentError("time factor " + std::to_string(ct) +
                              " does not divide the step count " + std::to_string(L_));
  }
  Grid g = *this;
  for (int a = 0; a < dim_; ++a) {
    g.h_[a] = h_[a] * cx;
    g.M_[a] = M_[a] / cx;
    g.N_[a] = floor_ratio(R_[a], g.h_[a]);
  }
  g.dt_ = dt_ * ct;
  g.L_ = L_ / ct;
  g.validate();
  return g;
}

Grid Grid::with_time(double dt, int L) const {
  require_positive(dt, "dt");
  if (L < 0) throw InvalidParameter("negative step count");
  Grid g = *this;
  g.dt_ = dt;
  g.L_ = L;
  g.T_ = dt * L;
  return g;
}

nlohmann::json Grid::to_json() const {
  nlohmann::json j;
  j["dim"] = dim_;
  j["R"] = {R_[0], R_[1]};
  j["step"] = {h_[0], h_[1]};
  j["M"] = {M_[0], M_[1]};
  j["N"] = {N_[0], N_[1]};
  j["dt"] = dt_;
  j["L"] = L_;
  j["T"] = T_;
  return j;
}

Grid Grid::from_json(const nlohmann::json& j) {
  Grid g;
  g.dim_ = j.at("dim").get<int>();
  if (g.dim_ != 1 && g.dim_ != 2) throw InvalidParameter("grid dim must be 1 or 2");
  for (int a = 0; a < 2; ++a) {
    g.R_[a] = j.at("R").at(a).get<double>();
    g.h_[a] = j.at("step").at(a).get<double>();
    g.M_[a] = j.at("M").at(a).get<int>();
    g.N_[a] = j.at("N").at(a).get<int>();
  }
  g.dt_ = j.at("dt").get<double>();
  g.L_ = j.at("L").get<int>();
  g.T_ = j.at("T").get<double>();
  g.validate();
  return g;
}

}  // namespace aggdiff
