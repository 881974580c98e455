#pragma once

#include <string>
#include <variant>

namespace icens {

struct NormalShape {
  double mean;
  double sd;
};

struct GammaShape {
  double shape;
  double rate;
};

// A proper univariate distribution used inside a random measure: the density
// of a WeightedDensity component or the CDF of a CdfRamp component.
// Gamma kernels carry an optional location shift, so that the kernel is the
// law of shift + G with G ~ Gamma(shape, rate).
class Kernel {
 public:
  static Kernel normal(double mean, double sd);
  static Kernel gamma(double shape, double rate, double shift = 0.0);

  bool is_normal() const noexcept { return std::holds_alternative<NormalShape>(shape_); }
  bool is_gamma() const noexcept { return std::holds_alternative<GammaShape>(shape_); }
  const NormalShape& normal_shape() const { return std::get<NormalShape>(shape_); }
  const GammaShape& gamma_shape() const { return std::get<GammaShape>(shape_); }
  double shift() const noexcept { return shift_; }

  // Left end of the support (-inf for normal kernels).
  double support_lower() const noexcept;
  // True when the density is unbounded at support_lower().
  bool singular_at_lower() const noexcept;

  double pdf(double x) const;
  double log_pdf(double x) const;
  double cdf(double x) const;
  double survival(double x) const;
  // Inverse CDF on [0, 1]; quantile(0) == support_lower().
  double quantile(double u) const;
  // Upper quantile: the x with survival(x) == q. Accurate for tiny q.
  double upper_quantile(double q) const;

  double mean() const noexcept;
  double variance() const noexcept;

  std::string describe() const;

 private:
  Kernel(std::variant<NormalShape, GammaShape> shape, double shift)
      : shape_(shape), shift_(shift) {}

  std::variant<NormalShape, GammaShape> shape_;
  double shift_ = 0.0;
};

}  // namespace icens
