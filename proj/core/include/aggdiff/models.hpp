#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace aggdiff {

/// Which radial profile a kernel or dictionary represents. In 1D the learned
/// object is phi = Phi'; in 2D it is phi(r)/r, which stays bounded at the origin.
enum class KernelForm { kernel, kernel_over_r };

std::string to_string(KernelForm form);
KernelForm kernel_form_from_string(const std::string& s);

/// f(r) = r^power * exp(-rate r^2) restricted to [lo, hi).
///
/// Every dictionary family used here is a scalar multiple of one atom, which
/// is what lets true_coefficients() match kernels to bases exactly.
struct RadialAtom {
  int power = 0;
  double rate = 0.0;
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();

  double value(double r) const;
  /// Integral of s^extra_power * f(s) over [0, r].
  double integral(double r, int extra_power) const;

  bool operator==(const RadialAtom&) const = default;
  nlohmann::json to_json() const;
  static RadialAtom from_json(const nlohmann::json& j);
};

struct RadialTerm {
  double coef = 1.0;
  RadialAtom atom;
};

/// Radial potential W(x) = Phi(|x|) described by its profile as a sum of
/// atoms (in the stated form) plus an additive constant on the potential.
class RadialKernel {
 public:
  RadialKernel() = default;
  RadialKernel(KernelForm form, std::vector<RadialTerm> terms, double potential_offset = 0.0,
               std::string label = {});

  KernelForm form() const noexcept { return form_; }
  const std::vector<RadialTerm>& terms() const noexcept { return terms_; }
  double potential_offset() const noexcept { return offset_; }
  const std::string& label() const noexcept { return label_; }

  /// Phi(r), normalised so Phi(0) = potential_offset.
  double potential(double r) const;
  /// phi(r) = Phi'(r).
  double kernel(double r) const;
  /// phi(r)/r; the represented profile itself for kernel_over_r kernels.
  double kernel_over_r(double r) const;
  /// The profile in this kernel's own form.
  double profile(double r) const;

  /// Gradient of W at displacement (dx, dy); zero at the origin. For dim 1, dy is ignored.
  void gradient(int dim, double dx, double dy, double& gx, double& gy) const;

  /// Largest r at which the potential is not yet constant (infinity if never).
  double potential_support() const;

  RadialKernel scaled(double factor) const;
  /// Same kernel expressed in the other form (atom powers shift by one).
  RadialKernel converted(KernelForm target) const;

  nlohmann::json to_json() const;
  static RadialKernel from_json(const nlohmann::json& j);

 private:
  KernelForm form_ = KernelForm::kernel;
  std::vector<RadialTerm> terms_;
  double offset_ = 0.0;
  std::string label_;
};

/// H(rho): none, linear kappa*rho*(log rho - 1), or power kappa*rho^m/(m-1).
struct DiffusionLaw {
  enum class Kind { none, linear, power };
  Kind kind = Kind::none;
  double kappa = 0.0;
  double exponent = 2.0;
  /// Floor applied to rho before taking the log for linear diffusion.
  static constexpr double kLogFloor = 1e-14;

  static DiffusionLaw none() { return {}; }
  static DiffusionLaw linear(double kappa);
  static DiffusionLaw power(double kappa, double m);

  double energy(double rho) const;
  /// H'(rho); rho is floored at kLogFloor (linear) or 0 (power).
  double derivative(double rho) const;
  /// rho * H''(rho), the coefficient of the linearised diffusion.
  double diffusivity(double rho) const;

  nlohmann::json to_json() const;
  static DiffusionLaw from_json(const nlohmann::json& j);
};

/// Confinement V(x) = sum_k a_k |x|^k with closed-form gradient.
class PotentialFn {
 public:
  struct Term {
    int power;
    double coef;
  };

  PotentialFn() = default;
  explicit PotentialFn(std::vector<Term> terms, std::string tag = "radial-polynomial");

  static PotentialFn zero() { return PotentialFn({}, "zero"); }
  /// |x|^4/4 - |x|^2/2.
  static PotentialFn double_well();

  double value(double x, double y = 0.0) const;
  void gradient(double x, double y, double& gx, double& gy) const;
  double dx(double x) const {
    double gx, gy;
    gradient(x, 0.0, gx, gy);
    return gx;
  }
  bool is_zero() const { return terms_.empty(); }
  PotentialFn scaled(double factor) const;

  const std::vector<Term>& terms() const noexcept { return terms_; }
  nlohmann::json to_json() const;
  static PotentialFn from_json(const nlohmann::json& j);

 private:
  std::vector<Term> terms_;
  std::string tag_ = "zero";
};

class BasisSet;

/// Interaction given as coefficients over a dictionary (used for re-simulation).
struct BasisExpansion {
  std::shared_ptr<const BasisSet> basis;
  std::vector<double> coefficients;
};

/// The forward problem: diffusion H, confinement V and interaction W.
struct ModelSpec {
  DiffusionLaw diffusion;
  PotentialFn confinement;
  std::variant<RadialKernel, BasisExpansion> interaction;

  /// The interaction as a single radial kernel (synthesised for expansions).
  RadialKernel interaction_kernel() const;

  nlohmann::json to_json() const;
  static ModelSpec from_json(const nlohmann::json& j);
  std::string hash() const;
};

}  // namespace aggdiff
