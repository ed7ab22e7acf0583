#include "aggdiff/basis.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "aggdiff/errors.hpp"
#include "aggdiff/hashing.hpp"

namespace aggdiff {
namespace {

constexpr double kEdgeTol = 1e-12;

bool same(double a, double b) {
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::abs(a - b) <= kEdgeTol * std::max(1.0, std::abs(a));
}

const std::map<BasisSet::Family, std::string>& family_names() {
  static const std::map<BasisSet::Family, std::string> names{
      {BasisSet::Family::piecewise_constant, "piecewise-constant"},
      {BasisSet::Family::piecewise_linear, "piecewise-linear"},
      {BasisSet::Family::polynomial, "polynomial"},
      {BasisSet::Family::gaussian, "gaussian"},
      {BasisSet::Family::scaled_gaussian_derivative, "scaled-gaussian-derivative"}};
  return names;
}

}  // namespace

std::string to_string(BasisSet::Family family) { return family_names().at(family); }

BasisSet::BasisSet(Family family, KernelForm form, std::vector<RadialTerm> elements,
                   nlohmann::json params)
    : family_(family), form_(form), elements_(std::move(elements)), params_(std::move(params)) {
  if (elements_.empty()) throw InvalidParameter("basis must have at least one element");
}

double BasisSet::profile(std::size_t i, double r) const {
  const auto& e = elements_.at(i);
  return e.coef * e.atom.value(r);
}

double BasisSet::potential(std::size_t i, double r) const {
  const auto& e = elements_.at(i);
  return e.coef * e.atom.integral(r, form_ == KernelForm::kernel ? 0 : 1);
}

RadialKernel BasisSet::element(std::size_t i) const {
  return RadialKernel(form_, {elements_.at(i)}, 0.0, "psi_" + std::to_string(i + 1));
}

RadialKernel BasisSet::synthesize(const std::vector<double>& c) const {
  if (c.size() != elements_.size()) {
    throw InvalidParameter("coefficient vector has " + std::to_string(c.size()) +
                           " entries, basis has " + std::to_string(elements_.size()));
  }
  std::vector<RadialTerm> terms;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] == 0.0) continue;
    terms.push_back({c[i] * elements_[i].coef, elements_[i].atom});
  }
  return RadialKernel(form_, std::move(terms), 0.0, "synthesized " + to_string(family_));
}

nlohmann::json BasisSet::to_json() const {
  nlohmann::json el = nlohmann::json::array();
  for (const auto& e : elements_) el.push_back({{"coef", e.coef}, {"atom", e.atom.to_json()}});
  return {{"family", to_string(family_)},
          {"form", to_string(form_)},
          {"params", params_},
          {"elements", el}};
}

BasisSet BasisSet::from_json(const nlohmann::json& j) {
  const auto name = j.at("family").get<std::string>();
  auto it = std::find_if(family_names().begin(), family_names().end(),
                         [&](const auto& kv) { return kv.second == name; });
  if (it == family_names().end()) throw FormatError("unknown basis family '" + name + "'");
  std::vector<RadialTerm> el;
  for (const auto& e : j.at("elements")) {
    el.push_back({e.at("coef").get<double>(), RadialAtom::from_json(e.at("atom"))});
  }
  return BasisSet(it->first, kernel_form_from_string(j.at("form").get<std::string>()),
                  std::move(el), j.value("params", nlohmann::json::object()));
}

std::string BasisSet::hash() const { return json_hash(to_json()); }

BasisSet basis_piecewise(int n, int degree, double domain_end, KernelForm form) {
  if (n < 1) throw InvalidParameter("piecewise basis needs n >= 1");
  if (degree != 0 && degree != 1) throw InvalidParameter("piecewise degree must be 0 or 1");
  if (!(domain_end > 0.0)) throw InvalidParameter("domain end must be positive");
  std::vector<RadialTerm> el;
  for (int j = 0; j < n; ++j) {
    const double lo = domain_end * j / n;
    const double hi = domain_end * (j + 1) / n;
    for (int p = 0; p <= degree; ++p) el.push_back({1.0, RadialAtom{p, 0.0, lo, hi}});
  }
  return BasisSet(degree == 0 ? BasisSet::Family::piecewise_constant
                              : BasisSet::Family::piecewise_linear,
                  form, std::move(el), {{"n", n}, {"degree", degree}, {"domain_end", domain_end}});
}

BasisSet basis_polynomial(int n, double scale, KernelForm form) {
  if (n < 1) throw InvalidParameter("polynomial basis needs n >= 1");
  if (!(scale > 0.0)) throw InvalidParameter("polynomial scale must be positive");
  std::vector<RadialTerm> el;
  for (int i = 0; i < n; ++i) el.push_back({std::pow(scale, -i), RadialAtom{i, 0.0}});
  return BasisSet(BasisSet::Family::polynomial, form, std::move(el),
                  {{"n", n}, {"scale", scale}});
}

BasisSet basis_gaussian(const std::vector<double>& weights, GaussianForm form) {
  if (weights.empty()) throw InvalidParameter("gaussian basis needs at least one weight");
  std::vector<RadialTerm> el;
  for (double w : weights) {
    if (!(w > 0.0)) throw InvalidParameter("gaussian weights must be positive");
    if (form == GaussianForm::scaled_linear) {
      el.push_back({1.0 / 6.0, RadialAtom{1, w}});
    } else {
      el.push_back({-2.0 * w, RadialAtom{0, w}});
    }
  }
  const bool lin = form == GaussianForm::scaled_linear;
  return BasisSet(lin ? BasisSet::Family::gaussian : BasisSet::Family::scaled_gaussian_derivative,
                  lin ? KernelForm::kernel : KernelForm::kernel_over_r, std::move(el),
                  {{"weights", weights}});
}

std::vector<double> linspace_step(double lo, double step, double hi) {
  if (!(step > 0.0)) throw InvalidParameter("step must be positive");
  std::vector<double> v;
  const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  for (int i = 0; i <= n; ++i) v.push_back(lo + i * step);
  return v;
}

std::optional<std::vector<double>> true_coefficients(const RadialKernel& kernel,
                                                     const BasisSet& basis, double radius) {
  RadialKernel k;
  try {
    k = kernel.converted(basis.form());
  } catch (const InvalidParameter&) {
    return std::nullopt;
  }
  std::vector<double> c(basis.size(), 0.0);
  const auto& el = basis.elements();
  for (const auto& term : k.terms()) {
    if (term.coef == 0.0) continue;
    const double lo = term.atom.lo;
    const double hi = std::min(term.atom.hi, radius);
    if (!(hi > lo)) continue;
    // Walk the cells of matching atoms left to right until [lo, hi) is covered.
    double cursor = lo;
    bool progressed = true;
    while (cursor < hi && !same(cursor, hi) && progressed) {
      progressed = false;
      for (std::size_t i = 0; i < el.size(); ++i) {
        const auto& a = el[i].atom;
        if (a.power != term.atom.power || !same(a.rate, term.atom.rate)) continue;
        if (!same(a.lo, cursor)) continue;
        // A cell sticking out past hi is fine only where the kernel no longer matters.
        if (a.hi > hi && !same(a.hi, hi) && hi < radius && !same(hi, radius)) continue;
        c[i] += term.coef / el[i].coef;
        cursor = a.hi;
        progressed = true;
        break;
      }
    }
    if (cursor < hi && !same(cursor, hi)) return std::nullopt;
  }
  return c;
}

}  // namespace aggdiff
