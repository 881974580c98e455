#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "icens/closedform.hpp"
#include "icens/estimator.hpp"
#include "icens/tailstudy.hpp"

namespace icens {

// Synthetic claims, top-k selection and bridging measures at a fixed sigma2.
struct TailScenarioSpec {
  SynthSpec synth;  // synth.n and synth.seed are overridden per replication
  std::size_t k = 69;
  double sigma2 = 1.0;
  BridgeVariant variant = BridgeVariant::A;
};

using Scenario = std::variant<NormalNormalSpec, ExpGammaSpec, TailScenarioSpec>;

std::string scenario_name(const Scenario& scenario);
// True parameter xi0.
double scenario_truth(const Scenario& scenario);
// Population limit xi of the estimator, when known in closed form.
std::optional<double> scenario_limit(const Scenario& scenario);

struct SimulatedSample {
  FamilyPtr family;
  Sample sample;
};

// Exp-Gamma: X ~ Exp(xi0), measures Gamma(X / sigma2, 1 / sigma2) (Dirac at X
// when sigma2 = 0). Normal-Normal: X ~ N(xi0, sigma1), Y with mean epsilon,
// sd sigma2 and corr(X, Y) = rho, measures N(X + Y, sigma) (Dirac when
// sigma = 0). Tail: synthesized claims, n of them, reduced to the top k.
SimulatedSample simulate_scenario(const Scenario& scenario, std::size_t n, std::uint64_t seed);

struct StudyConfig {
  Scenario scenario = ExpGammaSpec{};
  std::size_t n = 100;
  std::size_t replications = 100;
  std::uint64_t seed = 1;
  double ci_level = 0.95;
  FitMethod method = FitMethod::zroot;

  void validate() const;
};

struct ReplicationRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  double estimate = 0.0;
  double standard_error = 0.0;
  std::optional<bool> covered;  // CI contains the limit xi
  std::string error;
};

struct StudySummary {
  std::size_t replications = 0;
  std::size_t failures = 0;
  double truth = 0.0;
  std::optional<double> limit;
  double mean = 0.0;
  double variance = 0.0;  // unbiased, across replications
  double mse_truth = 0.0;
  std::optional<double> mse_limit;
  std::optional<double> coverage;
  // Z at the limit, pooled over every datapoint of every replication.
  std::optional<double> mean_z;
  std::optional<double> mean_z_se;
  std::vector<ReplicationRecord> records;
};

// Fits every replication and aggregates in replication order. CIs use the
// sandwich standard error of each replication. More than 10% failed
// replications raises ConvergenceError.
StudySummary replicate(const StudyConfig& config);

struct MeanEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t draws = 0;
};

// Monte Carlo mean of Z_c over independent single-datapoint draws.
MeanEstimate mean_z_at(const Scenario& scenario, double c, std::size_t draws,
                       std::uint64_t seed);

struct MMatrixCheck {
  double slope = 0.0;  // Monte Carlo d/dc E[Z_c]
  double slope_se = 0.0;
  double display = 0.0;   // displayed closed form (sign as displayed)
  double verified = 0.0;  // closed form by direct differentiation
  bool matches_display = false;   // |slope| within 4 SE of |display|
  bool matches_verified = false;  // |slope| within 4 SE of |verified|
  bool inconclusive = false;
  std::size_t required_draws = 0;  // suggested draws when inconclusive
};

// Central difference of the Monte Carlo mean of Z across c +/- step, with
// common random numbers for both sides.
MMatrixCheck verify_m_matrix(const Scenario& scenario, double c, double step,
                             std::size_t draws, std::uint64_t seed);

}  // namespace icens
