#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aggdiff/models.hpp"
#include "json.hpp"

namespace aggdiff {

/// Dictionary of radial hypothesis functions. Element i is a single scaled
/// atom; profile(i, r) is psi_i in 1D (kernel form) or psi_i(r)/r in 2D
/// (kernel_over_r form), and potential(i, r) is Psi_i with Psi_i(0) = 0.
class BasisSet {
 public:
  enum class Family {
    piecewise_constant,
    piecewise_linear,
    polynomial,
    gaussian,
    scaled_gaussian_derivative
  };

  BasisSet(Family family, KernelForm form, std::vector<RadialTerm> elements,
           nlohmann::json params);

  Family family() const noexcept { return family_; }
  KernelForm form() const noexcept { return form_; }
  std::size_t size() const noexcept { return elements_.size(); }
  const std::vector<RadialTerm>& elements() const noexcept { return elements_; }
  const nlohmann::json& params() const noexcept { return params_; }

  double profile(std::size_t i, double r) const;
  double potential(std::size_t i, double r) const;
  /// Element i as a stand-alone kernel.
  RadialKernel element(std::size_t i) const;

  /// Sum_i c_i Psi_i as a kernel in this basis' form.
  RadialKernel synthesize(const std::vector<double>& c) const;

  nlohmann::json to_json() const;
  static BasisSet from_json(const nlohmann::json& j);
  std::string hash() const;

 private:
  Family family_;
  KernelForm form_;
  std::vector<RadialTerm> elements_;
  nlohmann::json params_;
};

std::string to_string(BasisSet::Family family);

/// x^p on the cells [end*j/n, end*(j+1)/n), p = 0..degree, in natural ordering.
BasisSet basis_piecewise(int n, int degree, double domain_end = 6.0,
                         KernelForm form = KernelForm::kernel);

/// (r/scale)^(i-1), i = 1..n.
BasisSet basis_polynomial(int n, double scale, KernelForm form = KernelForm::kernel);

enum class GaussianForm {
  /// (r/6) exp(-w r^2) as the kernel.
  scaled_linear,
  /// -2w exp(-w r^2) as kernel/r (2D).
  scaled_derivative
};

BasisSet basis_gaussian(const std::vector<double>& weights, GaussianForm form);

/// Values lo, lo+step, ..., up to hi inclusive (tolerant to rounding).
std::vector<double> linspace_step(double lo, double step, double hi);

/// Exact coefficients of the kernel over the basis, or nullopt when the kernel
/// is not in the span. Matching is analytic: terms are compared by power and
/// rate, and intervals must be unions of basis cells. Only r in [0, radius)
/// is considered.
std::optional<std::vector<double>> true_coefficients(const RadialKernel& kernel,
                                                     const BasisSet& basis,
                                                     double radius);

}  // namespace aggdiff
