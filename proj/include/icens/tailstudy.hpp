#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "icens/estimator.hpp"
#include "icens/measure.hpp"

namespace icens {

struct ClaimRecord {
  std::string id;
  double paid = 0.0;      // W
  bool settled = false;   // delta
  double ultimate = 0.0;  // Z; equals W for settled claims
};

// Throws DataError when W <= 0, a settled claim has Z != W or an open claim
// has Z < W.
void validate_claim(const ClaimRecord& record);

struct RowDiagnostic {
  std::size_t line;  // 1-based line number in the input
  std::string message;
};

struct ClaimsTable {
  std::vector<ClaimRecord> records;
  std::vector<RowDiagnostic> rejected;  // rows failing validate_claim
};

// CSV with header `id,paid,settled,ultimate`. Monetary columns are divided
// by `scale`. Unparseable rows raise DataError; rows that parse but violate
// the claim invariants are skipped and reported in `rejected`. An input
// without any valid record is an error.
ClaimsTable parse_claims(std::istream& in, double scale = 1.0);
ClaimsTable load_claims(const std::filesystem::path& path, double scale = 1.0);
// Writes the same CSV format; monetary columns are multiplied by `scale`.
void write_claims(std::ostream& out, const std::vector<ClaimRecord>& records, double scale = 1.0);

double settled_fraction(const std::vector<ClaimRecord>& records);

struct TailSelection {
  double x0 = 0.0;                // (k+1)-th largest W
  std::vector<ClaimRecord> tail;  // k largest W with their concomitants
  bool ties = false;              // W tied across the selection boundary
};

// Order statistics of W, ties broken by input order.
TailSelection select_top_k(const std::vector<ClaimRecord>& records, std::size_t k);

// Pareto MLE treating every ultimate Z as exact: k / sum log(Z / x0).
double imputation_index(const std::vector<ClaimRecord>& tail, double x0);
// Censored Pareto MLE on (W, delta): sum delta / sum log(W / x0).
double survival_index(const std::vector<ClaimRecord>& tail, double x0);

// delta Dirac(W) + (1 - delta) gamma_bridge(W, Z, sigma2, variant) per claim.
Sample tail_measures(const std::vector<ClaimRecord>& tail, double sigma2, BridgeVariant variant);

struct TailConfig {
  std::size_t k = 69;
  std::vector<double> sigma2_grid;
  BridgeVariant variant = BridgeVariant::A;
  QuadratureSpec quad;
  OptimizerConfig optimizer = default_optimizer();

  static OptimizerConfig default_optimizer();
  void validate() const;
};

struct CurvePoint {
  double sigma2 = 0.0;
  std::optional<double> xi;          // fitted Pareto parameter c
  std::optional<double> tail_index;  // 1 / xi
  int iterations = 0;
  std::string diagnostic;  // empty on success
};

struct CurveResult {
  std::vector<CurvePoint> points;  // in grid order
  double imputation = 0.0;
  double survival = 0.0;
  double x0 = 0.0;
  std::size_t k = 0;
  BridgeVariant variant = BridgeVariant::A;
};

CurveResult tail_curve(const std::vector<ClaimRecord>& tail, double x0, const TailConfig& config);

struct SynthSpec {
  std::size_t n = 837;
  double xi0 = 1.5;                   // Pareto parameter of the ground-up claims
  double x0_scale = 0.05;             // Pareto scale of the ground-up claims
  double censoring_intensity = 1.0;   // rate of C / x0_scale; 0 disables censoring
  double noise_sd = 0.0;              // sd of the multiplicative expert error
  std::uint64_t seed = 1;

  void validate() const;
};

// X Pareto(xi0, x0_scale); C = x0_scale E / intensity with E ~ Exp(1);
// W = min(X, C), delta = 1{W = X}; open claims get Z = max(X (1 + noise), W).
std::vector<ClaimRecord> synthesize_claims(const SynthSpec& spec);

// Censoring intensity whose expected settled fraction P(X <= C) equals `fraction`.
double censoring_intensity_for(double fraction, double xi0);

const char* to_string(BridgeVariant variant);
BridgeVariant parse_variant(const std::string& text);

}  // namespace icens
