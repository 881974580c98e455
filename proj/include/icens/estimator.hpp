#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "icens/measure.hpp"
#include "icens/models.hpp"

namespace icens {

// Informed censored sample: one random measure per datapoint.
using Sample = std::vector<RandomMeasure>;

enum class FitMethod { minimize, zroot };

const char* to_string(FitMethod method);
FitMethod parse_fit_method(const std::string& text);

struct OptimizerConfig {
  // Initial search interval for one-parameter families; the family default
  // is used when absent.
  std::optional<std::pair<double, double>> bracket;
  // Starting point for multi-parameter (Nelder-Mead) fits.
  std::optional<Vector> start;
  double param_tol = 1e-10;
  double objective_tol = 1e-12;
  int max_iterations = 500;
  // Finite-difference step is fd_relative_step * max(|c|, 1).
  double fd_relative_step = 1e-6;

  void validate() const;
  double step(double c) const;
};

struct SandwichMatrices {
  Eigen::MatrixXd m;  // (1/n) sum dZ/dc^T
  Eigen::MatrixXd j;  // (1/n) sum Z Z^T
  Eigen::MatrixXd v;  // M^-1 J M^-T
  double condition_number = 0.0;
};

struct FitResult {
  Vector estimate;
  std::optional<SandwichMatrices> sandwich;
  std::string sandwich_error;  // set when the sandwich could not be formed
  Vector standard_errors;      // sqrt(V_ii / n); empty without a sandwich
  std::size_t n = 0;
  FitMethod method = FitMethod::zroot;
  bool converged = false;
  bool at_boundary = false;
  int iterations = 0;
  double objective = 0.0;  // sum of W at the estimate
};

// W_c = -log int f_c dmu; +inf when the integral vanishes.
double w_value(const ParametricFamily& family, const Vector& c, const RandomMeasure& measure,
               const QuadratureSpec& quad = {});
// Z_c = dW_c/dc, the estimating function: sum_k Z_c^(k) = 0 at the estimate.
// Throws DomainError when W_c is infinite or c is not interior to Xi.
Vector z_value(const ParametricFamily& family, const Vector& c, const RandomMeasure& measure,
               const QuadratureSpec& quad = {});

inline double w_value(const ParametricFamily& family, double c, const RandomMeasure& measure,
                      const QuadratureSpec& quad = {}) {
  return w_value(family, scalar_parameter(c), measure, quad);
}
inline double z_value(const ParametricFamily& family, double c, const RandomMeasure& measure,
                      const QuadratureSpec& quad = {}) {
  return z_value(family, scalar_parameter(c), measure, quad)[0];
}

struct LoglikEvaluation {
  double value = 0.0;              // sum_k log int f_c dmu_k
  std::size_t infinite_terms = 0;  // datapoints with a vanishing integral
};

LoglikEvaluation generalized_loglik(const ParametricFamily& family, const Vector& c,
                                    const Sample& sample, const QuadratureSpec& quad = {});

FitResult fit(const ParametricFamily& family, const Sample& sample,
              const OptimizerConfig& config = {}, const QuadratureSpec& quad = {},
              FitMethod method = FitMethod::zroot);

// Sandwich matrices at the estimate. M is the central finite difference of
// the mean estimating function. Throws SingularMatrixError when M is not
// invertible.
SandwichMatrices sandwich(const ParametricFamily& family, const Vector& estimate,
                          const Sample& sample, const QuadratureSpec& quad = {},
                          const OptimizerConfig& config = {});

struct BootstrapResult {
  std::size_t replicates = 0;
  std::size_t failures = 0;
  std::vector<Vector> estimates;  // successful refits, in replicate order
  std::optional<Vector> standard_errors;
  std::optional<Vector> lower;  // 2.5% percentile
  std::optional<Vector> upper;  // 97.5% percentile
};

// Nonparametric bootstrap over datapoints. Standard errors and percentiles
// are absent with fewer than two successful refits; more than 10% failed
// refits raises ConvergenceError.
BootstrapResult bootstrap_se(const ParametricFamily& family, const Sample& sample,
                             std::size_t replicates, std::uint64_t seed,
                             const OptimizerConfig& config = {}, const QuadratureSpec& quad = {},
                             FitMethod method = FitMethod::zroot);

// V / n + (xi - xi0)^2.
double amse(double variance, double xi, double xi0, double n);

}  // namespace icens
