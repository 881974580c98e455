#pragma once

#include <optional>
#include <string>
#include <vector>

namespace icens {

// Normal location model with Gaussian expert guesses centered at X + Y.
struct NormalNormalSpec {
  double xi0 = 0.0;      // true location
  double sigma1 = 1.0;   // known model sd
  double epsilon = 0.0;  // E[Y]
  double sigma2 = 0.0;   // sd of Y
  double sigma = 0.0;    // expert spread
  double rho = 0.0;      // corr(X, Y)

  void validate() const;
};

// Exponential rate model with moment-matched Gamma expert guesses.
struct ExpGammaSpec {
  double xi0 = 1.0;     // true rate
  double sigma2 = 0.0;  // expert variance scale

  void validate() const;  // includes sigma2 * xi0 < 1
};

struct NormalNormalCharacteristics {
  double xi;    // xi0 + epsilon
  double bias;  // xi - xi0
  double m;   // 1 / (sigma1^2 + sigma^2)
  double j;   // Var(X + Y) / (sigma1^2 + sigma^2)^2
  double v;   // Var(X + Y) = sigma1^2 + sigma2^2 + 2 rho sigma1 sigma2
  // sigma1^2 + 2 sigma2^2 + rho sigma1 sigma2, the Gaussian-vector variance
  // as displayed in the source derivation (not used downstream).
  double v_display;
  double amse(double n) const;
};

struct ExpGammaCharacteristics {
  double xi;         // (1/xi0 - sigma2)^-1
  double bias;       // xi - xi0
  double m;          // (1/xi0 - sigma2)^2 (1 - xi0 sigma2), by direct differentiation
  double m_display;  // -(1/xi0 - sigma2)^2 (1 + xi0 sigma2), as displayed
  double j;          // (1/xi0 - sigma2)^2
  double v;          // j / m^2 = 1 / ((1/xi0 - sigma2)(1 - xi0 sigma2))^2
  double v_display;  // 1 / (1/xi0 - xi0 sigma2^2)^2, as displayed
  double amse(double n) const;          // uses v
  double amse_display(double n) const;  // uses v_display
};

NormalNormalCharacteristics nn_characteristics(const NormalNormalSpec& spec);
ExpGammaCharacteristics eg_characteristics(const ExpGammaSpec& spec);

struct OptimalNoise {
  double epsilon;             // always 0
  double sigma2_sq_display;   // max(-rho sigma1^2 / 4, 0), as displayed
  double sigma2_numerical;    // argmin over sigma2 >= 0 of Var(X + Y)
  double variance_at_numerical;
};

// Noise parameters minimizing the AMSE; sigma2 and epsilon in `spec` are ignored.
OptimalNoise nn_optimal_noise(const NormalNormalSpec& spec);

// AMSE(expert) / AMSE(oracle) with oracle AMSE xi0^2 / n.
double efficiency(const ExpGammaSpec& spec, double n);

// sigma (not sigma^2) with efficiency(sigma^2, n) == e, for e >= 1.
double solve_sigma(double e, double n, double xi0);

// Real n with AMSE(expert, n) == xi0^2 / n0; nullopt when the bias alone
// already exceeds the oracle AMSE (or sigma^2 xi0 >= 1).
std::optional<double> solve_n(double n0, double sigma, double xi0);

struct Axis {
  std::vector<double> values;

  // "lo:hi:steps" (linear) or "lo:hi:steps:log".
  static Axis parse(const std::string& text);
  static Axis linear(double lo, double hi, std::size_t steps);
  static Axis logarithmic(double lo, double hi, std::size_t steps);
};

enum class SurfaceKind { sigma_of_e_n, n_of_n0_sigma };

struct EfficiencySurface {
  SurfaceKind kind;
  double xi0;
  // sigma_of_e_n: rows are e, columns are n. n_of_n0_sigma: rows n0, columns sigma.
  Axis rows;
  Axis columns;
  std::vector<std::vector<std::optional<double>>> values;
  std::vector<std::vector<std::string>> diagnostics;  // empty string when solved
};

EfficiencySurface surface_grid(SurfaceKind kind, const Axis& rows, const Axis& columns,
                               double xi0);

}  // namespace icens
