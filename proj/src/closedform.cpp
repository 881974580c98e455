#include "icens/closedform.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "icens/errors.hpp"
#include "icens/optimize.hpp"

namespace icens {

void NormalNormalSpec::validate() const {
  if (!(sigma1 > 0.0)) throw DomainError("normal-normal spec needs sigma1 > 0");
  if (!(sigma >= 0.0) || !(sigma2 >= 0.0)) {
    throw DomainError("normal-normal spec needs sigma >= 0 and sigma2 >= 0");
  }
  if (!(rho >= -1.0 && rho <= 1.0)) throw DomainError("normal-normal spec needs rho in [-1, 1]");
  if (!std::isfinite(xi0) || !std::isfinite(epsilon)) {
    throw DomainError("normal-normal spec needs finite xi0 and epsilon");
  }
}

void ExpGammaSpec::validate() const {
  if (!(xi0 > 0.0) || !std::isfinite(xi0)) throw DomainError("exp-gamma spec needs xi0 > 0");
  if (!(sigma2 >= 0.0)) throw DomainError("exp-gamma spec needs sigma2 >= 0");
  if (!(sigma2 * xi0 < 1.0)) {
    throw DomainError("exp-gamma limit requires sigma2 * xi0 < 1");
  }
}

double NormalNormalCharacteristics::amse(double n) const { return v / n + bias * bias; }
double ExpGammaCharacteristics::amse(double n) const { return v / n + bias * bias; }
double ExpGammaCharacteristics::amse_display(double n) const {
  return v_display / n + bias * bias;
}

NormalNormalCharacteristics nn_characteristics(const NormalNormalSpec& spec) {
  spec.validate();
  const double s1 = spec.sigma1;
  const double s2 = spec.sigma2;
  const double total = s1 * s1 + spec.sigma * spec.sigma;
  const double var_sum = s1 * s1 + s2 * s2 + 2.0 * spec.rho * s1 * s2;
  NormalNormalCharacteristics out{};
  out.xi = spec.xi0 + spec.epsilon;
  out.bias = spec.epsilon;
  out.m = 1.0 / total;
  out.j = var_sum / (total * total);
  out.v = var_sum;
  out.v_display = s1 * s1 + 2.0 * s2 * s2 + spec.rho * s1 * s2;
  return out;
}

ExpGammaCharacteristics eg_characteristics(const ExpGammaSpec& spec) {
  spec.validate();
  const double a = 1.0 / spec.xi0 - spec.sigma2;
  const double xs = spec.xi0 * spec.sigma2;
  ExpGammaCharacteristics out{};
  out.xi = 1.0 / a;
  out.bias = out.xi - spec.xi0;
  out.m = a * a * (1.0 - xs);
  out.m_display = -a * a * (1.0 + xs);
  out.j = a * a;
  const double root_v = a * (1.0 - xs);
  out.v = spec.sigma2 == 0.0 ? spec.xi0 * spec.xi0 : 1.0 / (root_v * root_v);
  const double d = 1.0 / spec.xi0 - spec.xi0 * spec.sigma2 * spec.sigma2;
  out.v_display = 1.0 / (d * d);
  return out;
}

OptimalNoise nn_optimal_noise(const NormalNormalSpec& spec) {
  NormalNormalSpec base = spec;
  base.epsilon = 0.0;
  base.sigma2 = 0.0;
  base.validate();
  const double s1 = spec.sigma1;
  auto variance = [&](double s2) { return s1 * s1 + s2 * s2 + 2.0 * spec.rho * s1 * s2; };

  OptimalNoise out{};
  out.epsilon = 0.0;
  out.sigma2_sq_display = std::max(-spec.rho * s1 * s1 / 4.0, 0.0);
  const ScalarSolution sol = minimize_scalar(variance, 0.0, 2.0 * s1 + 1.0, 500);
  double best = sol.x;
  // Boundary minimum: Brent stops within its tolerance of the wall.
  if (best < 1e-6 * s1 && variance(0.0) <= variance(best)) best = 0.0;
  out.sigma2_numerical = best;
  out.variance_at_numerical = variance(best);
  return out;
}

double efficiency(const ExpGammaSpec& spec, double n) {
  if (!(n > 0.0)) throw DomainError("efficiency needs n > 0");
  const auto ch = eg_characteristics(spec);
  const double oracle = spec.xi0 * spec.xi0 / n;
  return ch.amse(n) / oracle;
}

double solve_sigma(double e, double n, double xi0) {
  if (!(e >= 1.0)) throw DomainError("solve_sigma needs e >= 1");
  if (!(n > 0.0)) throw DomainError("solve_sigma needs n > 0");
  if (!(xi0 > 0.0)) throw DomainError("solve_sigma needs xi0 > 0");
  if (e == 1.0) return 0.0;
  const double sigma_max = std::sqrt(1.0 / xi0);
  auto f = [&](double sigma) { return efficiency(ExpGammaSpec{xi0, sigma * sigma}, n) - e; };
  double hi = sigma_max * (1.0 - 1e-12);
  const double fhi = f(hi);
  const double flo = f(0.0);
  if (!(fhi > 0.0)) throw ConvergenceError("no sigma attains the requested efficiency");
  const ScalarSolution root = find_root(f, 0.0, hi, flo, fhi, 1e-15, 500);
  if (!root.converged) throw ConvergenceError("solve_sigma did not converge");
  return root.x;
}

std::optional<double> solve_n(double n0, double sigma, double xi0) {
  if (!(n0 > 0.0)) throw DomainError("solve_n needs n0 > 0");
  if (!(sigma >= 0.0)) throw DomainError("solve_n needs sigma >= 0");
  if (sigma == 0.0) return n0;
  const ExpGammaSpec spec{xi0, sigma * sigma};
  if (!(spec.sigma2 * xi0 < 1.0)) return std::nullopt;
  const auto ch = eg_characteristics(spec);
  const double slack = xi0 * xi0 / n0 - ch.bias * ch.bias;
  if (!(slack > 0.0)) return std::nullopt;
  return ch.v / slack;
}

Axis Axis::linear(double lo, double hi, std::size_t steps) {
  if (steps < 1) throw DomainError("axis needs at least one step");
  Axis axis;
  if (steps == 1) {
    axis.values = {lo};
    return axis;
  }
  if (!(hi > lo)) throw DomainError("axis needs lo < hi");
  for (std::size_t i = 0; i < steps; ++i) {
    axis.values.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1));
  }
  axis.values.back() = hi;
  return axis;
}

Axis Axis::logarithmic(double lo, double hi, std::size_t steps) {
  if (!(lo > 0.0)) throw DomainError("logarithmic axis needs lo > 0");
  Axis axis = linear(std::log10(lo), std::log10(steps == 1 ? lo : hi), steps);
  for (auto& v : axis.values) v = std::pow(10.0, v);
  axis.values.front() = lo;
  if (steps > 1) axis.values.back() = hi;
  return axis;
}

Axis Axis::parse(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto colon = text.find(':', start);
    parts.push_back(text.substr(start, colon - start));
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  if (parts.size() != 3 && parts.size() != 4) {
    throw DomainError("grid must look like lo:hi:steps[:log], got '" + text + "'");
  }
  auto number = [&](const std::string& s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw DomainError("invalid number '" + s + "' in grid '" + text + "'");
    }
    return v;
  };
  const double lo = number(parts[0]);
  const double hi = number(parts[1]);
  const double steps = number(parts[2]);
  if (!(steps >= 1.0) || steps != std::floor(steps)) {
    throw DomainError("grid steps must be a positive integer in '" + text + "'");
  }
  if (parts.size() == 4) {
    if (parts[3] != "log") throw DomainError("grid scale must be 'log' in '" + text + "'");
    return logarithmic(lo, hi, static_cast<std::size_t>(steps));
  }
  return linear(lo, hi, static_cast<std::size_t>(steps));
}

EfficiencySurface surface_grid(SurfaceKind kind, const Axis& rows, const Axis& columns,
                               double xi0) {
  auto increasing = [](const Axis& a) {
    if (a.values.empty()) return false;
    for (std::size_t i = 1; i < a.values.size(); ++i) {
      if (!(a.values[i] > a.values[i - 1])) return false;
    }
    return true;
  };
  if (!increasing(rows) || !increasing(columns)) {
    throw DomainError("surface axes must be nonempty and strictly increasing");
  }
  if (!(xi0 > 0.0)) throw DomainError("surface needs xi0 > 0");
  EfficiencySurface out{kind, xi0, rows, columns, {}, {}};
  out.values.assign(rows.values.size(), std::vector<std::optional<double>>(columns.values.size()));
  out.diagnostics.assign(rows.values.size(), std::vector<std::string>(columns.values.size()));
  for (std::size_t r = 0; r < rows.values.size(); ++r) {
    for (std::size_t c = 0; c < columns.values.size(); ++c) {
      try {
        if (kind == SurfaceKind::sigma_of_e_n) {
          out.values[r][c] = solve_sigma(rows.values[r], columns.values[c], xi0);
        } else {
          out.values[r][c] = solve_n(rows.values[r], columns.values[c], xi0);
          if (!out.values[r][c]) out.diagnostics[r][c] = "infeasible: bias exceeds oracle AMSE";
        }
      } catch (const Error& e) {
        out.diagnostics[r][c] = e.what();
      }
    }
  }
  return out;
}

}  // namespace icens
