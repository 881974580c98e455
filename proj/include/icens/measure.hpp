#pragma once

#include <limits>
#include <variant>
#include <vector>

#include "icens/kernel.hpp"
#include "icens/models.hpp"
#include "icens/quadrature.hpp"

namespace icens {

struct DiracAtom {
  double location;
};

// weight * kernel density, restricted to [lower, inf) and not renormalized.
struct WeightedDensity {
  double weight;
  Kernel kernel;
  double lower = -std::numeric_limits<double>::infinity();
};

// Improper component whose Lebesgue density is the kernel CDF.
struct CdfRamp {
  Kernel kernel;
};

// Improper component with density `height` on [lower, inf).
struct ConstantTail {
  double lower;
  double height;
};

using MeasureComponent = std::variant<DiracAtom, WeightedDensity, CdfRamp, ConstantTail>;

enum class BridgeVariant { A, B };

// A datapoint represented as a (possibly improper) measure on the real line.
class RandomMeasure {
 public:
  // support_lower defaults to the smallest lower end among the components.
  explicit RandomMeasure(std::vector<MeasureComponent> components);
  RandomMeasure(std::vector<MeasureComponent> components, double support_lower);

  const std::vector<MeasureComponent>& components() const noexcept { return components_; }
  double support_lower() const noexcept { return support_lower_; }

  // +inf when an improper component is present.
  double total_mass() const;

  // Density of the absolutely continuous part at x (Dirac atoms excluded).
  double lebesgue_density(double x) const;

 private:
  std::vector<MeasureComponent> components_;
  double support_lower_;
};

RandomMeasure make_dirac(double location);
RandomMeasure make_density(const Kernel& kernel, double weight = 1.0);
// observed: Dirac at W; censored: constant density 1 on [W, inf).
RandomMeasure make_right_censoring(double paid, bool observed);
// indicator set: kernel density; otherwise the kernel CDF as an improper density.
RandomMeasure make_measurement_uncertainty(const Kernel& kernel, bool indicator);

// Bridging measure for an open claim with paid amount W and ultimate Z:
//   min(sigma2, 1) on [W, inf) plus a Gamma density restricted to x >= W.
// Variant A: x - W + 1 ~ Gamma with mean Z - W + 1 and variance (Z - W + 1) sigma2.
// Variant B: x ~ Gamma with mean Z and variance Z sigma2.
RandomMeasure make_gamma_bridge(double paid, double ultimate, double sigma2,
                                BridgeVariant variant);

// log int f_c dmu and its parameter gradient. Atoms are evaluated directly,
// constant tails through the family's survival function, registered closed
// forms are used for kernel components when available and adaptive
// quadrature otherwise. Throws QuadratureError on non-convergence.
LogIntegral integrate_log(const ParametricFamily& family, const Vector& c,
                          const RandomMeasure& measure, const QuadratureSpec& quad = {});

double integrate(const ParametricFamily& family, const Vector& c, const RandomMeasure& measure,
                 const QuadratureSpec& quad = {});
inline double integrate(const ParametricFamily& family, double c, const RandomMeasure& measure,
                        const QuadratureSpec& quad = {}) {
  return integrate(family, scalar_parameter(c), measure, quad);
}

}  // namespace icens
