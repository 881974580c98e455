#include "icens/tailstudy.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string_view>

#include "icens/errors.hpp"
#include "icens/optimize.hpp"
#include "icens/parallel.hpp"
#include "icens/rng.hpp"

namespace icens {

namespace {

constexpr std::string_view kHeader = "id,paid,settled,ultimate";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

double parse_number(std::string_view text, std::size_t line, const char* column) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw DataError("line " + std::to_string(line) + ": column '" + column +
                    "' is not a finite number: '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

void validate_claim(const ClaimRecord& r) {
  if (!(r.paid > 0.0) || !std::isfinite(r.paid)) {
    throw DataError("claim " + r.id + ": paid amount must be positive");
  }
  if (!std::isfinite(r.ultimate)) throw DataError("claim " + r.id + ": ultimate is not finite");
  if (r.settled && r.ultimate != r.paid) {
    throw DataError("claim " + r.id + ": settled claim with ultimate different from paid");
  }
  if (!r.settled && r.ultimate < r.paid) {
    throw DataError("claim " + r.id + ": open claim with ultimate below paid");
  }
}

ClaimsTable parse_claims(std::istream& in, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("scale must be positive");
  ClaimsTable table;
  std::string line;
  std::size_t number = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++number;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    if (!header_seen) {
      if (text != kHeader) {
        throw DataError("line " + std::to_string(number) + ": expected header '" +
                        std::string(kHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    const auto fields = split(text);
    if (fields.size() != 4) {
      throw DataError("line " + std::to_string(number) + ": expected 4 columns, found " +
                      std::to_string(fields.size()));
    }
    ClaimRecord r;
    r.id = std::string(fields[0]);
    if (r.id.empty()) throw DataError("line " + std::to_string(number) + ": empty id");
    r.paid = parse_number(fields[1], number, "paid") / scale;
    if (fields[2] == "1") {
      r.settled = true;
    } else if (fields[2] == "0") {
      r.settled = false;
    } else {
      throw DataError("line " + std::to_string(number) + ": settled must be 0 or 1");
    }
    r.ultimate = parse_number(fields[3], number, "ultimate") / scale;
    try {
      validate_claim(r);
    } catch (const DataError& e) {
      table.rejected.push_back({number, e.what()});
      continue;
    }
    table.records.push_back(std::move(r));
  }
  if (!header_seen) throw DataError("claims input is empty");
  if (table.records.empty()) throw DataError("claims input has no valid records");
  return table;
}

ClaimsTable load_claims(const std::filesystem::path& path, double scale) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open claims file " + path.string());
  return parse_claims(in, scale);
}

void write_claims(std::ostream& out, const std::vector<ClaimRecord>& records, double scale) {
  out << kHeader << '\n';
  for (const auto& r : records) {
    const std::string paid = format_number(r.paid * scale);
    out << r.id << ',' << paid << ',' << (r.settled ? 1 : 0) << ','
        << (r.settled ? paid : format_number(r.ultimate * scale)) << '\n';
  }
}

double settled_fraction(const std::vector<ClaimRecord>& records) {
  if (records.empty()) return 0.0;
  const auto settled = std::count_if(records.begin(), records.end(),
                                     [](const ClaimRecord& r) { return r.settled; });
  return static_cast<double>(settled) / static_cast<double>(records.size());
}

TailSelection select_top_k(const std::vector<ClaimRecord>& records, std::size_t k) {
  if (k < 1) throw DomainError("k must be positive");
  if (records.size() < k + 1) {
    throw DataError("need at least k+1 = " + std::to_string(k + 1) + " claims, have " +
                    std::to_string(records.size()));
  }
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return records[a].paid > records[b].paid;
  });
  TailSelection out;
  out.x0 = records[order[k]].paid;
  out.ties = records[order[k - 1]].paid == out.x0;
  out.tail.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.tail.push_back(records[order[i]]);
  return out;
}

double imputation_index(const std::vector<ClaimRecord>& tail, double x0) {
  if (tail.empty()) throw DomainError("empty tail sample");
  if (!(x0 > 0.0)) throw DomainError("x0 must be positive");
  double s = 0.0;
  for (const auto& r : tail) {
    if (r.ultimate < x0) throw DomainError("ultimate of claim " + r.id + " below x0");
    s += std::log(r.ultimate / x0);
  }
  if (!(s > 0.0)) throw DomainError("all ultimates equal x0; the Pareto MLE diverges");
  return static_cast<double>(tail.size()) / s;
}

double survival_index(const std::vector<ClaimRecord>& tail, double x0) {
  if (tail.empty()) throw DomainError("empty tail sample");
  if (!(x0 > 0.0)) throw DomainError("x0 must be positive");
  double s = 0.0;
  std::size_t settled = 0;
  for (const auto& r : tail) {
    if (r.paid < x0) throw DomainError("paid amount of claim " + r.id + " below x0");
    s += std::log(r.paid / x0);
    if (r.settled) ++settled;
  }
  if (settled == 0) throw DomainError("no settled claim in the tail; no finite maximizer");
  if (!(s > 0.0)) throw DomainError("all paid amounts equal x0; the Pareto MLE diverges");
  return static_cast<double>(settled) / s;
}

Sample tail_measures(const std::vector<ClaimRecord>& tail, double sigma2, BridgeVariant variant) {
  Sample sample;
  sample.reserve(tail.size());
  for (const auto& r : tail) {
    sample.push_back(r.settled ? make_dirac(r.paid)
                               : make_gamma_bridge(r.paid, r.ultimate, sigma2, variant));
  }
  return sample;
}

OptimizerConfig TailConfig::default_optimizer() {
  OptimizerConfig c;
  c.bracket = std::make_pair(1e-3, 1e3);
  return c;
}

void TailConfig::validate() const {
  if (k < 2) throw DomainError("k must be at least 2");
  if (sigma2_grid.empty()) throw DomainError("sigma2 grid is empty");
  for (std::size_t i = 0; i < sigma2_grid.size(); ++i) {
    if (!(sigma2_grid[i] > 0.0) || !std::isfinite(sigma2_grid[i])) {
      throw DomainError("sigma2 grid values must be positive and finite");
    }
    if (i > 0 && !(sigma2_grid[i] > sigma2_grid[i - 1])) {
      throw DomainError("sigma2 grid must be strictly increasing");
    }
  }
  quad.validate();
  optimizer.validate();
}

CurveResult tail_curve(const std::vector<ClaimRecord>& tail, double x0, const TailConfig& config) {
  config.validate();
  if (tail.size() < 2) throw DomainError("tail sample needs at least 2 claims");
  CurveResult out;
  out.x0 = x0;
  out.k = tail.size();
  out.variant = config.variant;
  out.imputation = imputation_index(tail, x0);
  out.survival = survival_index(tail, x0);

  const ParetoTail family(x0);
  out.points.resize(config.sigma2_grid.size());
  parallel_for(config.sigma2_grid.size(), [&](std::size_t i) {
    CurvePoint& p = out.points[i];
    p.sigma2 = config.sigma2_grid[i];
    try {
      const Sample sample = tail_measures(tail, p.sigma2, config.variant);
      const FitResult r = fit(family, sample, config.optimizer, config.quad, FitMethod::zroot);
      p.iterations = r.iterations;
      if (!r.converged) {
        p.diagnostic = "root finder did not converge";
      } else if (r.at_boundary) {
        p.diagnostic = "estimate at the parameter boundary";
      } else {
        p.xi = r.estimate[0];
        p.tail_index = 1.0 / r.estimate[0];
      }
    } catch (const Error& e) {
      p.diagnostic = e.what();
    }
  });
  return out;
}

void SynthSpec::validate() const {
  if (n < 1) throw DomainError("n must be positive");
  if (!(xi0 > 0.0) || !std::isfinite(xi0)) throw DomainError("xi0 must be positive");
  if (!(x0_scale > 0.0) || !std::isfinite(x0_scale)) throw DomainError("x0 scale must be positive");
  if (!(censoring_intensity >= 0.0) || !std::isfinite(censoring_intensity)) {
    throw DomainError("censoring intensity must be nonnegative");
  }
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
    throw DomainError("noise sd must be nonnegative");
  }
}

std::vector<ClaimRecord> synthesize_claims(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng = make_stream(spec.seed, 0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::exponential_distribution<double> exponential(1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const std::size_t width = std::to_string(spec.n).size();
  std::vector<ClaimRecord> out;
  out.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    // 1 - U lies in (0, 1].
    const double u = 1.0 - uniform(rng);
    const double x = spec.x0_scale * std::pow(u, -1.0 / spec.xi0);
    const double e = exponential(rng);
    const double noise = normal(rng);
    const double c = spec.censoring_intensity > 0.0
                         ? spec.x0_scale * e / spec.censoring_intensity
                         : std::numeric_limits<double>::infinity();
    ClaimRecord r;
    std::string id = std::to_string(i + 1);
    r.id = "c" + std::string(width - id.size(), '0') + id;
    r.settled = x <= c;
    r.paid = r.settled ? x : c;
    r.ultimate = r.settled ? x : std::max(x * (1.0 + spec.noise_sd * noise), r.paid);
    out.push_back(std::move(r));
  }
  return out;
}

double censoring_intensity_for(double fraction, double xi0) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw DomainError("fraction must lie in (0, 1)");
  if (!(xi0 > 0.0)) throw DomainError("xi0 must be positive");
  // P(X <= C) = E exp(-lambda X / x0) = int_0^1 exp(-lambda u^(-1/xi0)) du.
  QuadratureSpec quad;
  quad.rel_tol = 1e-12;
  quad.abs_tol = 1e-15;
  auto settled = [&](double lambda) {
    auto f = [&](double u) {
      QuadVector v(1);
      v[0] = u > 0.0 ? std::exp(-lambda * std::pow(u, -1.0 / xi0)) : 0.0;
      return v;
    };
    const std::array<double, 6> breaks{0.0, 1e-4, 1e-2, 0.1, 0.5, 1.0};
    return integrate_pieces(f, std::span<const double>(breaks), 1, quad).value[0];
  };
  double lo = 0.0;
  double hi = 1.0;
  while (settled(hi) > fraction) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw ConvergenceError("censoring intensity search diverged");
  }
  auto g = [&](double lambda) { return settled(lambda) - fraction; };
  return find_root(g, lo, hi, 1.0 - fraction, g(hi), 1e-13, 200).x;
}

const char* to_string(BridgeVariant variant) { return variant == BridgeVariant::A ? "A" : "B"; }

BridgeVariant parse_variant(const std::string& text) {
  if (text == "A" || text == "a") return BridgeVariant::A;
  if (text == "B" || text == "b") return BridgeVariant::B;
  throw DomainError("unknown bridge variant '" + text + "' (expected A or B)");
}

}  // namespace icens
