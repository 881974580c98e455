#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include <Eigen/Core>

#include "icens/kernel.hpp"

namespace icens {

// Parameter vectors live on the stack; built-in families have p = 1 and
// user families may use up to 8 parameters.
inline constexpr int kMaxParameters = 8;
using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxParameters, 1>;

inline Vector scalar_parameter(double c) {
  Vector v(1);
  v[0] = c;
  return v;
}

// log of a positive integral and the gradient of that log in the parameter.
struct LogIntegral {
  double log_value;
  Vector grad;
};

// Parametric density family f_c on the real line, c in Xi (an open box).
//
// The virtual members are the unchecked evaluation hooks: they assume c lies
// in Xi. The non-virtual members validate c (and x where relevant) first and
// are what callers outside the library should use.
class ParametricFamily {
 public:
  virtual ~ParametricFamily() = default;

  // Specification string, e.g. "pareto(x0=0.5)". parse_family(spec()) gives
  // an equivalent family for the built-ins.
  virtual std::string spec() const = 0;
  virtual std::size_t dimension() const { return 1; }
  // Xi is the open box prod_i (lower_i, upper_i).
  virtual double parameter_lower(std::size_t i) const = 0;
  virtual double parameter_upper(std::size_t i) const = 0;
  // Lower end of supp(f_c), the same for every c.
  virtual double support_lower() const = 0;

  virtual double log_pdf(const Vector& c, double x) const = 0;
  // d/dc log f_c(x). Defaults to central finite differences of log_pdf.
  virtual Vector log_pdf_grad(const Vector& c, double x) const;

  virtual bool has_survival() const { return false; }
  // log(1 - F_c(x)); throws DomainError when has_survival() is false.
  virtual double log_sf(const Vector& c, double x) const;
  // d/dc log(1 - F_c(x)). Defaults to central finite differences of log_sf.
  virtual Vector log_sf_grad(const Vector& c, double x) const;

  // Closed form of log int_{[lower, inf)} f_c(x) k(x) dx, when registered.
  virtual std::optional<LogIntegral> kernel_integral(const Vector& c, const Kernel& k,
                                                     double lower) const;

  // Search interval for one-parameter fits when none is configured.
  virtual std::pair<double, double> default_bracket() const = 0;

  bool contains(const Vector& c) const;
  void require_parameter(const Vector& c) const;

  double density(const Vector& c, double x) const;
  double survival(const Vector& c, double x) const;
  double cdf(const Vector& c, double x) const;
  Vector log_density_grad(const Vector& c, double x) const;

  double density(double c, double x) const { return density(scalar_parameter(c), x); }
  double survival(double c, double x) const { return survival(scalar_parameter(c), x); }
  double cdf(double c, double x) const { return cdf(scalar_parameter(c), x); }
  Vector log_density_grad(double c, double x) const {
    return log_density_grad(scalar_parameter(c), x);
  }
};

using FamilyPtr = std::shared_ptr<const ParametricFamily>;

// N(c, sigma1^2) with sigma1 known; Xi = R.
class NormalLocation final : public ParametricFamily {
 public:
  explicit NormalLocation(double sigma1);
  double sigma1() const noexcept { return sigma1_; }

  std::string spec() const override;
  double parameter_lower(std::size_t) const override;
  double parameter_upper(std::size_t) const override;
  double support_lower() const override;
  double log_pdf(const Vector& c, double x) const override;
  Vector log_pdf_grad(const Vector& c, double x) const override;
  bool has_survival() const override { return true; }
  double log_sf(const Vector& c, double x) const override;
  Vector log_sf_grad(const Vector& c, double x) const override;
  std::optional<LogIntegral> kernel_integral(const Vector& c, const Kernel& k,
                                             double lower) const override;
  std::pair<double, double> default_bracket() const override;

 private:
  double sigma1_;
};

// f_c(x) = c exp(-c x), x >= 0; Xi = (0, inf).
class ExponentialRate final : public ParametricFamily {
 public:
  std::string spec() const override;
  double parameter_lower(std::size_t) const override;
  double parameter_upper(std::size_t) const override;
  double support_lower() const override;
  double log_pdf(const Vector& c, double x) const override;
  Vector log_pdf_grad(const Vector& c, double x) const override;
  bool has_survival() const override { return true; }
  double log_sf(const Vector& c, double x) const override;
  Vector log_sf_grad(const Vector& c, double x) const override;
  std::optional<LogIntegral> kernel_integral(const Vector& c, const Kernel& k,
                                             double lower) const override;
  std::pair<double, double> default_bracket() const override;
};

// F_c(x) = 1 - (x / x0)^(-c), x >= x0; Xi = (0, inf).
class ParetoTail final : public ParametricFamily {
 public:
  explicit ParetoTail(double x0);
  double x0() const noexcept { return x0_; }

  std::string spec() const override;
  double parameter_lower(std::size_t) const override;
  double parameter_upper(std::size_t) const override;
  double support_lower() const override;
  double log_pdf(const Vector& c, double x) const override;
  Vector log_pdf_grad(const Vector& c, double x) const override;
  bool has_survival() const override { return true; }
  double log_sf(const Vector& c, double x) const override;
  Vector log_sf_grad(const Vector& c, double x) const override;
  std::pair<double, double> default_bracket() const override;

 private:
  double x0_;
};

// Parses "normal(sigma1=...)", "exp" and "pareto(x0=...)".
FamilyPtr parse_family(std::string_view spec);

// Shortest decimal text that round-trips the double.
std::string format_number(double value);

}  // namespace icens
