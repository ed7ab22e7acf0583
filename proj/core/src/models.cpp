#include "aggdiff/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>

#include "aggdiff/basis.hpp"
#include "aggdiff/errors.hpp"
#include "aggdiff/hashing.hpp"

namespace aggdiff {
namespace {

double ipow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

// Primitive of s^q exp(-w s^2) via the standard reduction q -> q-2.
double gauss_moment_primitive(int q, double w, double s) {
  if (q == 0) {
    return 0.5 * std::sqrt(std::numbers::pi / w) * std::erf(std::sqrt(w) * s);
  }
  if (q == 1) return -std::exp(-w * s * s) / (2.0 * w);
  return -ipow(s, q - 1) * std::exp(-w * s * s) / (2.0 * w) +
         (q - 1) / (2.0 * w) * gauss_moment_primitive(q - 2, w, s);
}

double moment(int q, double w, double a, double b) {
  if (b <= a) return 0.0;
  if (w == 0.0) return (ipow(b, q + 1) - ipow(a, q + 1)) / (q + 1);
  if (q <= 3) return gauss_moment_primitive(q, w, b) - gauss_moment_primitive(q, w, a);
  auto f = [q, w](double s) { return ipow(s, q) * std::exp(-w * s * s); };
  return boost::math::quadrature::gauss<double, 32>::integrate(f, a, b);
}

nlohmann::json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

std::string to_string(KernelForm form) {
  return form == KernelForm::kernel ? "kernel" : "kernel_over_r";
}

KernelForm kernel_form_from_string(const std::string& s) {
  if (s == "kernel") return KernelForm::kernel;
  if (s == "kernel_over_r") return KernelForm::kernel_over_r;
  throw FormatError("unknown kernel form '" + s + "'");
}

double RadialAtom::value(double r) const {
  if (r < lo || r >= hi) return 0.0;
  const double e = rate == 0.0 ? 1.0 : std::exp(-rate * r * r);
  return ipow(r, power) * e;
}

double RadialAtom::integral(double r, int extra_power) const {
  const int q = power + extra_power;
  if (q < 0) throw InvalidParameter("atom integral with negative power");
  return moment(q, rate, lo, std::min(r, hi));
}

nlohmann::json RadialAtom::to_json() const {
  return {{"power", power}, {"rate", rate}, {"lo", lo}, {"hi", finite_or_null(hi)}};
}

RadialAtom RadialAtom::from_json(const nlohmann::json& j) {
  RadialAtom a;
  a.power = j.at("power").get<int>();
  a.rate = j.value("rate", 0.0);
  a.lo = j.value("lo", 0.0);
  const auto& hi = j.at("hi");
  a.hi = hi.is_null() ? std::numeric_limits<double>::infinity() : hi.get<double>();
  if (a.power < 0 || a.rate < 0.0 || a.lo < 0.0 || !(a.hi > a.lo)) {
    throw FormatError("invalid radial atom " + j.dump());
  }
  return a;
}

RadialKernel::RadialKernel(KernelForm form, std::vector<RadialTerm> terms,
                           double potential_offset, std::string label)
    : form_(form), terms_(std::move(terms)), offset_(potential_offset), label_(std::move(label)) {}

double RadialKernel::potential(double r) const {
  const int extra = form_ == KernelForm::kernel ? 0 : 1;
  double s = offset_;
  for (const auto& t : terms_) s += t.coef * t.atom.integral(r, extra);
  return s;
}

double RadialKernel::profile(double r) const {
  double s = 0.0;
  for (const auto& t : terms_) s += t.coef * t.atom.value(r);
  return s;
}

double RadialKernel::kernel(double r) const {
  return form_ == KernelForm::kernel ? profile(r) : r * profile(r);
}

double RadialKernel::kernel_over_r(double r) const {
  if (form_ == KernelForm::kernel_over_r) return profile(r);
  return r > 0.0 ? profile(r) / r : 0.0;
}

void RadialKernel::gradient(int dim, double dx, double dy, double& gx, double& gy) const {
  gx = gy = 0.0;
  if (dim == 1) {
    if (dx == 0.0) return;
    const double phi = kernel(std::abs(dx));
    gx = dx > 0.0 ? phi : -phi;
    return;
  }
  const double r = std::hypot(dx, dy);
  if (r == 0.0) return;
  const double g = kernel_over_r(r);
  gx = g * dx;
  gy = g * dy;
}

double RadialKernel::potential_support() const {
  double s = 0.0;
  for (const auto& t : terms_) {
    if (t.coef == 0.0) continue;
    s = std::max(s, t.atom.hi);
  }
  return s;
}

RadialKernel RadialKernel::scaled(double factor) const {
  RadialKernel k = *this;
  for (auto& t : k.terms_) t.coef *= factor;
  k.offset_ *= factor;
  return k;
}

RadialKernel RadialKernel::converted(KernelForm target) const {
  if (target == form_) return *this;
  RadialKernel k = *this;
  k.form_ = target;
  for (auto& t : k.terms_) {
    t.atom.power += target == KernelForm::kernel ? 1 : -1;
    if (t.atom.power < 0) {
      throw InvalidParameter("kernel profile is singular at the origin in kernel_over_r form");
    }
  }
  return k;
}

nlohmann::json RadialKernel::to_json() const {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : terms_) terms.push_back({{"coef", t.coef}, {"atom", t.atom.to_json()}});
  return {{"form", to_string(form_)},
          {"terms", terms},
          {"potential_offset", offset_},
          {"label", label_}};
}

RadialKernel RadialKernel::from_json(const nlohmann::json& j) {
  std::vector<RadialTerm> terms;
  for (const auto& t : j.at("terms")) {
    terms.push_back({t.at("coef").get<double>(), RadialAtom::from_json(t.at("atom"))});
  }
  return RadialKernel(kernel_form_from_string(j.at("form").get<std::string>()), std::move(terms),
                      j.value("potential_offset", 0.0), j.value("label", std::string{}));
}

DiffusionLaw DiffusionLaw::linear(double kappa) {
  if (!(kappa > 0.0)) throw InvalidParameter("diffusion constant must be positive");
  return {Kind::linear, kappa, 1.0};
}

DiffusionLaw DiffusionLaw::power(double kappa, double m) {
  if (!(kappa > 0.0)) throw InvalidParameter("diffusion constant must be positive");
  if (!(m > 1.0)) throw InvalidParameter("power-law exponent must exceed 1");
  return {Kind::power, kappa, m};
}

double DiffusionLaw::energy(double rho) const {
  switch (kind) {
    case Kind::none:
      return 0.0;
    case Kind::linear: {
      if (rho <= 0.0) return 0.0;
      return kappa * rho * (std::log(rho) - 1.0);
    }
    case Kind::power:
      return rho <= 0.0 ? 0.0 : kappa * std::pow(rho, exponent) / (exponent - 1.0);
  }
  return 0.0;
}

double DiffusionLaw::derivative(double rho) const {
  switch (kind) {
    case Kind::none:
      return 0.0;
    case Kind::linear:
      return kappa * std::log(std::max(rho, kLogFloor));
    case Kind::power: {
      if (rho <= 0.0) return 0.0;
      if (exponent == 2.0) return 2.0 * kappa * rho;
      return kappa * exponent * std::pow(rho, exponent - 1.0) / (exponent - 1.0);
    }
  }
  return 0.0;
}

double DiffusionLaw::diffusivity(double rho) const {
  switch (kind) {
    case Kind::none:
      return 0.0;
    case Kind::linear:
      return kappa;
    case Kind::power:
      return rho <= 0.0 ? 0.0 : kappa * exponent * std::pow(rho, exponent - 1.0);
  }
  return 0.0;
}

nlohmann::json DiffusionLaw::to_json() const {
  switch (kind) {
    case Kind::none:
      return {{"kind", "none"}};
    case Kind::linear:
      return {{"kind", "linear"}, {"kappa", kappa}};
    case Kind::power:
      return {{"kind", "power"}, {"kappa", kappa}, {"m", exponent}};
  }
  return {};
}

DiffusionLaw DiffusionLaw::from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "none") return none();
  if (kind == "linear") return linear(j.at("kappa").get<double>());
  if (kind == "power") return power(j.at("kappa").get<double>(), j.at("m").get<double>());
  throw FormatError("unknown diffusion kind '" + kind + "'");
}

PotentialFn::PotentialFn(std::vector<Term> terms, std::string tag)
    : terms_(std::move(terms)), tag_(std::move(tag)) {
  for (const auto& t : terms_) {
    if (t.power < 0) throw InvalidParameter("potential powers must be non-negative");
  }
  std::erase_if(terms_, [](const Term& t) { return t.coef == 0.0; });
}

PotentialFn PotentialFn::double_well() {
  return PotentialFn({{4, 0.25}, {2, -0.5}}, "double-well");
}

double PotentialFn::value(double x, double y) const {
  const double r = std::hypot(x, y);
  double s = 0.0;
  for (const auto& t : terms_) s += t.coef * ipow(r, t.power);
  return s;
}

void PotentialFn::gradient(double x, double y, double& gx, double& gy) const {
  gx = gy = 0.0;
  const double r = std::hypot(x, y);
  // grad |x|^k = k |x|^(k-2) x
  double g = 0.0;
  for (const auto& t : terms_) {
    if (t.power == 0) continue;
    if (t.power == 1) {
      if (r > 0.0) g += t.coef / r;
    } else {
      g += t.coef * t.power * ipow(r, t.power - 2);
    }
  }
  gx = g * x;
  gy = g * y;
}

PotentialFn PotentialFn::scaled(double factor) const {
  PotentialFn p = *this;
  for (auto& t : p.terms_) t.coef *= factor;
  std::erase_if(p.terms_, [](const Term& t) { return t.coef == 0.0; });
  return p;
}

nlohmann::json PotentialFn::to_json() const {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : terms_) terms.push_back({{"power", t.power}, {"coef", t.coef}});
  return {{"tag", tag_}, {"terms", terms}};
}

PotentialFn PotentialFn::from_json(const nlohmann::json& j) {
  std::vector<Term> terms;
  for (const auto& t : j.at("terms")) {
    terms.push_back({t.at("power").get<int>(), t.at("coef").get<double>()});
  }
  return PotentialFn(std::move(terms), j.value("tag", std::string("radial-polynomial")));
}

RadialKernel ModelSpec::interaction_kernel() const {
  if (const auto* k = std::get_if<RadialKernel>(&interaction)) return *k;
  const auto& e = std::get<BasisExpansion>(interaction);
  if (!e.basis) throw InvalidParameter("basis expansion without a basis");
  return e.basis->synthesize(e.coefficients);
}

nlohmann::json ModelSpec::to_json() const {
  nlohmann::json j{{"diffusion", diffusion.to_json()}, {"confinement", confinement.to_json()}};
  if (const auto* k = std::get_if<RadialKernel>(&interaction)) {
    j["interaction"] = {{"kind", "kernel"}, {"kernel", k->to_json()}};
  } else {
    const auto& e = std::get<BasisExpansion>(interaction);
    j["interaction"] = {{"kind", "expansion"},
                        {"basis", e.basis->to_json()},
                        {"coefficients", e.coefficients}};
  }
  return j;
}

ModelSpec ModelSpec::from_json(const nlohmann::json& j) {
  ModelSpec m;
  m.diffusion = DiffusionLaw::from_json(j.at("diffusion"));
  m.confinement = PotentialFn::from_json(j.at("confinement"));
  const auto& in = j.at("interaction");
  const auto kind = in.at("kind").get<std::string>();
  if (kind == "kernel") {
    m.interaction = RadialKernel::from_json(in.at("kernel"));
  } else if (kind == "expansion") {
    auto basis = std::make_shared<const BasisSet>(BasisSet::from_json(in.at("basis")));
    auto c = in.at("coefficients").get<std::vector<double>>();
    if (c.size() != basis->size()) throw FormatError("coefficient count does not match basis");
    m.interaction = BasisExpansion{std::move(basis), std::move(c)};
  } else {
    throw FormatError("unknown interaction kind '" + kind + "'");
  }
  return m;
}

std::string ModelSpec::hash() const { return json_hash(to_json()); }

}  // namespace aggdiff
