#include "icens/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "icens/errors.hpp"
#include "icens/optimize.hpp"
#include "icens/parallel.hpp"
#include "icens/rng.hpp"

namespace icens {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double objective(const ParametricFamily& family, const Vector& c, const Sample& sample,
                 const QuadratureSpec& quad) {
  if (!family.contains(c)) return kInf;
  double total = 0.0;
  for (const auto& mu : sample) {
    const double lv = integrate_log(family, c, mu, quad).log_value;
    if (lv == -kInf) return kInf;
    total -= lv;
  }
  return total;
}

// Sum of the estimating function; NaN where some W term is infinite.
double z_total(const ParametricFamily& family, double c, const Sample& sample,
               const QuadratureSpec& quad) {
  const Vector cv = scalar_parameter(c);
  if (!family.contains(cv)) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  for (const auto& mu : sample) {
    const LogIntegral li = integrate_log(family, cv, mu, quad);
    if (li.log_value == -kInf) return std::numeric_limits<double>::quiet_NaN();
    total -= li.grad[0];
  }
  return total;
}

std::pair<double, double> initial_bracket(const ParametricFamily& family,
                                          const OptimizerConfig& config) {
  auto [lo, hi] = config.bracket.value_or(family.default_bracket());
  if (!(lo < hi)) throw DomainError("fit bracket must satisfy lower < upper");
  if (!family.contains(scalar_parameter(lo)) || !family.contains(scalar_parameter(hi))) {
    throw DomainError("fit bracket must lie inside the parameter domain of '" + family.spec() +
                      "'");
  }
  return {lo, hi};
}

// One geometric expansion step of a bracket end toward the domain boundary.
// Returns false when the boundary has been reached.
bool expand_down(const ParametricFamily& family, double& lo, double hi) {
  const double bound = family.parameter_lower(0);
  double next;
  if (std::isfinite(bound)) {
    next = bound + (lo - bound) / 4.0;
  } else {
    next = lo - 2.0 * std::max(hi - lo, 1.0);
  }
  if (!(next < lo) || !family.contains(scalar_parameter(next)) || next - bound < 1e-300) {
    return false;
  }
  lo = next;
  return true;
}

bool expand_up(const ParametricFamily& family, double lo, double& hi) {
  const double bound = family.parameter_upper(0);
  double next;
  if (std::isfinite(bound)) {
    next = bound - (bound - hi) / 4.0;
  } else if (hi > 0.0 && family.parameter_lower(0) >= 0.0) {
    next = hi * 4.0;
  } else {
    next = hi + 2.0 * std::max(hi - lo, 1.0);
  }
  if (!(next > hi) || !family.contains(scalar_parameter(next)) || std::abs(next) > 1e300) {
    return false;
  }
  hi = next;
  return true;
}

// Moves an endpoint toward the other until g is finite there.
template <class G>
bool make_finite(G& g, double& end, double other, double& value) {
  value = g(end);
  for (int i = 0; i < 80 && !std::isfinite(value); ++i) {
    end = 0.5 * (end + other);
    value = g(end);
  }
  return std::isfinite(value);
}

struct ScalarFit {
  double x;
  int iterations;
  bool converged;
  bool at_boundary;
};

ScalarFit zroot_fit(const ParametricFamily& family, const Sample& sample,
                    const OptimizerConfig& config, const QuadratureSpec& quad) {
  auto g = [&](double c) { return z_total(family, c, sample, quad); };
  auto [lo, hi] = initial_bracket(family, config);
  double glo = 0.0;
  double ghi = 0.0;
  if (!make_finite(g, lo, hi, glo) || !make_finite(g, hi, lo, ghi)) {
    throw ConvergenceError("estimating function is not finite anywhere in the bracket");
  }
  int expansions = 0;
  while ((glo > 0.0) == (ghi > 0.0) && glo != 0.0 && ghi != 0.0 && expansions < 200) {
    ++expansions;
    // Sum Z increases through the root of a convex objective: move the end
    // on the side where the root must lie.
    bool moved = false;
    if (glo > 0.0) {
      double next = lo;
      if (expand_down(family, next, hi)) {
        const double gn = g(next);
        if (std::isfinite(gn)) {
          hi = lo;
          ghi = glo;
          lo = next;
          glo = gn;
          moved = true;
        }
      }
    } else {
      double next = hi;
      if (expand_up(family, lo, next)) {
        const double gn = g(next);
        if (std::isfinite(gn)) {
          lo = hi;
          glo = ghi;
          hi = next;
          ghi = gn;
          moved = true;
        }
      }
    }
    if (!moved) break;
  }
  if ((glo > 0.0) == (ghi > 0.0) && glo != 0.0 && ghi != 0.0) {
    throw ConvergenceError("estimating function has no sign change up to the domain boundary");
  }
  const ScalarSolution root =
      find_root(g, lo, hi, glo, ghi, config.param_tol, config.max_iterations);
  if (!root.converged) throw ConvergenceError("root finder exceeded the iteration limit");
  return {root.x, root.iterations, true, false};
}

ScalarFit minimize_fit(const ParametricFamily& family, const Sample& sample,
                       const OptimizerConfig& config, const QuadratureSpec& quad) {
  auto f = [&](double c) { return objective(family, scalar_parameter(c), sample, quad); };
  auto [lo, hi] = initial_bracket(family, config);
  int total_iterations = 0;
  for (int round = 0; round < 1000; ++round) {
    const ScalarSolution sol = minimize_scalar(f, lo, hi, config.max_iterations);
    total_iterations += sol.iterations;
    if (!std::isfinite(sol.value)) {
      throw ConvergenceError("objective is infinite throughout the search interval");
    }
    if (!sol.converged) throw ConvergenceError("minimizer exceeded the iteration limit");
    const double edge = 1e-6 * (hi - lo);
    const bool at_lo = sol.x - lo < edge;
    const bool at_hi = hi - sol.x < edge;
    if (!at_lo && !at_hi) return {sol.x, total_iterations, true, false};
    double new_lo = lo;
    double new_hi = hi;
    const bool moved = at_lo ? expand_down(family, new_lo, hi) : expand_up(family, lo, new_hi);
    if (!moved) return {sol.x, total_iterations, false, true};
    lo = new_lo;
    hi = new_hi;
  }
  throw ConvergenceError("minimizer kept hitting the search interval boundary");
}

Vector as_vector(const Eigen::VectorXd& v) {
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

}  // namespace

const char* to_string(FitMethod method) {
  return method == FitMethod::minimize ? "minimize" : "zroot";
}

FitMethod parse_fit_method(const std::string& text) {
  if (text == "minimize") return FitMethod::minimize;
  if (text == "zroot") return FitMethod::zroot;
  throw DomainError("unknown fit method '" + text + "'");
}

void OptimizerConfig::validate() const {
  if (!(param_tol > 0.0) || !(objective_tol > 0.0)) {
    throw DomainError("optimizer tolerances must be > 0");
  }
  if (max_iterations < 1) throw DomainError("optimizer needs max_iterations >= 1");
  if (!(fd_relative_step > 0.0)) throw DomainError("finite-difference step must be > 0");
}

double OptimizerConfig::step(double c) const {
  return fd_relative_step * std::max(std::abs(c), 1.0);
}

double w_value(const ParametricFamily& family, const Vector& c, const RandomMeasure& measure,
               const QuadratureSpec& quad) {
  return -integrate_log(family, c, measure, quad).log_value;
}

Vector z_value(const ParametricFamily& family, const Vector& c, const RandomMeasure& measure,
               const QuadratureSpec& quad) {
  const LogIntegral li = integrate_log(family, c, measure, quad);
  if (li.log_value == -kInf) {
    throw DomainError("estimating function undefined: the generalized density integrates to 0");
  }
  return -li.grad;
}

LoglikEvaluation generalized_loglik(const ParametricFamily& family, const Vector& c,
                                    const Sample& sample, const QuadratureSpec& quad) {
  family.require_parameter(c);
  LoglikEvaluation out;
  for (const auto& mu : sample) {
    const double lv = integrate_log(family, c, mu, quad).log_value;
    if (lv == -kInf) {
      ++out.infinite_terms;
    } else {
      out.value += lv;
    }
  }
  if (out.infinite_terms > 0) out.value = -kInf;
  return out;
}

SandwichMatrices sandwich(const ParametricFamily& family, const Vector& estimate,
                          const Sample& sample, const QuadratureSpec& quad,
                          const OptimizerConfig& config) {
  family.require_parameter(estimate);
  if (sample.empty()) throw DomainError("sandwich needs a nonempty sample");
  const Eigen::Index p = estimate.size();
  const double n = static_cast<double>(sample.size());

  SandwichMatrices out;
  out.j = Eigen::MatrixXd::Zero(p, p);
  out.m = Eigen::MatrixXd::Zero(p, p);
  for (const auto& mu : sample) {
    const Vector z = z_value(family, estimate, mu, quad);
    out.j += z * z.transpose();
  }
  out.j /= n;

  for (Eigen::Index col = 0; col < p; ++col) {
    const double h = config.step(estimate[col]);
    Vector up = estimate;
    Vector down = estimate;
    up[col] += h;
    down[col] -= h;
    double span = 2.0 * h;
    if (!family.contains(down)) {
      down = estimate;
      span = h;
    } else if (!family.contains(up)) {
      up = estimate;
      span = h;
    }
    Vector diff = Vector::Zero(p);
    for (const auto& mu : sample) {
      diff += (z_value(family, up, mu, quad) - z_value(family, down, mu, quad)) / span;
    }
    out.m.col(col) = diff / n;
  }

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(out.m);
  const auto& sv = svd.singularValues();
  const double smax = sv.maxCoeff();
  const double smin = sv.minCoeff();
  out.condition_number = smin > 0.0 ? smax / smin : kInf;
  if (!(smin > 0.0) || out.condition_number > 1e12) {
    throw SingularMatrixError("derivative matrix M is singular (condition number " +
                                  format_number(out.condition_number) + ")",
                              out.condition_number);
  }
  const Eigen::MatrixXd minv = out.m.inverse();
  const Eigen::MatrixXd v = minv * out.j * minv.transpose();
  out.v = 0.5 * (v + v.transpose());
  return out;
}

FitResult fit(const ParametricFamily& family, const Sample& sample, const OptimizerConfig& config,
              const QuadratureSpec& quad, FitMethod method) {
  config.validate();
  quad.validate();
  if (sample.empty()) throw DomainError("fit needs a nonempty sample");
  FitResult result;
  result.n = sample.size();
  result.method = method;

  if (family.dimension() == 1) {
    const ScalarFit sf = method == FitMethod::zroot ? zroot_fit(family, sample, config, quad)
                                                    : minimize_fit(family, sample, config, quad);
    result.estimate = scalar_parameter(sf.x);
    result.iterations = sf.iterations;
    result.converged = sf.converged;
    result.at_boundary = sf.at_boundary;
  } else {
    if (method == FitMethod::zroot) {
      throw DomainError("zroot fits support one-parameter families only");
    }
    if (!config.start) throw DomainError("multi-parameter fits need a starting point");
    family.require_parameter(*config.start);
    Vector step(config.start->size());
    for (Eigen::Index i = 0; i < step.size(); ++i) {
      step[i] = 0.1 * std::max(std::abs((*config.start)[i]), 1.0);
    }
    auto f = [&](const Vector& c) { return objective(family, c, sample, quad); };
    const SimplexSolution sol = nelder_mead(f, *config.start, step, config.param_tol,
                                            config.objective_tol, config.max_iterations * 20);
    if (!std::isfinite(sol.value)) {
      throw ConvergenceError("objective is infinite at every simplex vertex");
    }
    if (!sol.converged) throw ConvergenceError("simplex search exceeded the iteration limit");
    result.estimate = sol.x;
    result.iterations = sol.iterations;
    result.converged = true;
  }

  result.objective = objective(family, result.estimate, sample, quad);
  if (result.converged && family.contains(result.estimate)) {
    try {
      result.sandwich = sandwich(family, result.estimate, sample, quad, config);
      const double n = static_cast<double>(result.n);
      result.standard_errors = as_vector((result.sandwich->v.diagonal() / n).cwiseMax(0.0).cwiseSqrt());
    } catch (const Error& e) {
      result.sandwich_error = e.what();
    }
  }
  return result;
}

BootstrapResult bootstrap_se(const ParametricFamily& family, const Sample& sample,
                             std::size_t replicates, std::uint64_t seed,
                             const OptimizerConfig& config, const QuadratureSpec& quad,
                             FitMethod method) {
  if (replicates < 1) throw DomainError("bootstrap needs at least one replicate");
  if (sample.empty()) throw DomainError("bootstrap needs a nonempty sample");
  std::vector<std::optional<Vector>> slots(replicates);
  parallel_for(replicates, [&](std::size_t b) {
    auto rng = make_stream(seed, b);
    std::uniform_int_distribution<std::size_t> pick(0, sample.size() - 1);
    Sample resampled;
    resampled.reserve(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) resampled.push_back(sample[pick(rng)]);
    try {
      FitResult r = fit(family, resampled, config, quad, method);
      if (r.converged) slots[b] = r.estimate;
    } catch (const Error&) {
    }
  });

  BootstrapResult out;
  out.replicates = replicates;
  for (auto& s : slots) {
    if (s) {
      out.estimates.push_back(*s);
    } else {
      ++out.failures;
    }
  }
  if (static_cast<double>(out.failures) > 0.1 * static_cast<double>(replicates)) {
    throw ConvergenceError("bootstrap aborted: " + std::to_string(out.failures) + " of " +
                           std::to_string(replicates) + " refits failed");
  }
  const std::size_t m = out.estimates.size();
  if (m < 2) return out;

  const Eigen::Index p = out.estimates.front().size();
  Vector mean = Vector::Zero(p);
  for (const auto& e : out.estimates) mean += e;
  mean /= static_cast<double>(m);
  Vector var = Vector::Zero(p);
  for (const auto& e : out.estimates) var += (e - mean).cwiseAbs2();
  var /= static_cast<double>(m - 1);
  out.standard_errors = Vector(var.cwiseSqrt());

  // Linear interpolation between order statistics.
  auto percentile = [](std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(i);
    return i + 1 < v.size() ? v[i] + frac * (v[i + 1] - v[i]) : v[i];
  };
  Vector lower(p);
  Vector upper(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    std::vector<double> coord;
    coord.reserve(m);
    for (const auto& e : out.estimates) coord.push_back(e[k]);
    lower[k] = percentile(coord, 0.025);
    upper[k] = percentile(coord, 0.975);
  }
  out.lower = lower;
  out.upper = upper;
  return out;
}

double amse(double variance, double xi, double xi0, double n) {
  if (!(n >= 1.0)) throw DomainError("amse needs n >= 1");
  if (!(variance >= 0.0)) throw DomainError("amse needs a nonnegative variance");
  const double bias = xi - xi0;
  return variance / n + bias * bias;
}

}  // namespace icens
