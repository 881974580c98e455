#include "icens/measure.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "icens/errors.hpp"

namespace icens {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Interior quantile levels used as breakpoints for kernel integrals.
constexpr double kBreakLevels[] = {1e-10, 1e-6, 1e-3, 0.02, 0.1, 0.25, 0.5,
                                   0.75,  0.9,  0.98, 0.999, 1 - 1e-6};

double component_lower(const MeasureComponent& comp) {
  return std::visit(
      [](const auto& c) -> double {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, DiracAtom>) {
          return c.location;
        } else if constexpr (std::is_same_v<T, WeightedDensity>) {
          return std::max(c.lower, c.kernel.support_lower());
        } else if constexpr (std::is_same_v<T, CdfRamp>) {
          return c.kernel.support_lower();
        } else {
          return c.lower;
        }
      },
      comp);
}

void validate_component(const MeasureComponent& comp) {
  std::visit(
      [](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, DiracAtom>) {
          if (!std::isfinite(c.location)) throw DomainError("Dirac location must be finite");
        } else if constexpr (std::is_same_v<T, WeightedDensity>) {
          if (!(c.weight >= 0.0) || !std::isfinite(c.weight)) {
            throw DomainError("density weight must be finite and nonnegative");
          }
          if (std::isnan(c.lower) || c.lower == kInf) {
            throw DomainError("density restriction must be below +inf");
          }
        } else if constexpr (std::is_same_v<T, ConstantTail>) {
          if (!std::isfinite(c.lower)) throw DomainError("constant tail lower end must be finite");
          if (!(c.height >= 0.0) || !std::isfinite(c.height)) {
            throw DomainError("constant tail height must be finite and nonnegative");
          }
        }
      },
      comp);
}

// Sorted, deduplicated breakpoints on [lo, hi]: kernel quantiles and, when the
// range spans several decades above the kernel's left end, geometric points.
std::vector<double> kernel_breaks(const Kernel& k, double lo, double hi) {
  std::vector<double> breaks{lo, hi};
  for (double u : kBreakLevels) {
    const double q = k.quantile(u);
    if (q > lo && q < hi) breaks.push_back(q);
  }
  std::sort(breaks.begin(), breaks.end());
  const double anchor = k.is_gamma() ? k.shift() : lo;
  if (k.is_gamma()) {
    std::vector<double> extra;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
      double a = breaks[i] - anchor;
      const double b = breaks[i + 1] - anchor;
      if (!(a > 0.0)) continue;
      int guard = 0;
      while (b / a > 10.0 && guard++ < 400) {
        a *= 10.0;
        extra.push_back(anchor + a);
      }
    }
    breaks.insert(breaks.end(), extra.begin(), extra.end());
    std::sort(breaks.begin(), breaks.end());
  }
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  return breaks;
}

[[noreturn]] void quadrature_failure(const std::string& what, const QuadratureResult& r) {
  throw QuadratureError(what + " did not converge within " + std::to_string(r.subdivisions) +
                            " subdivisions",
                        r.value[0], r.error[0]);
}

// Vector integrand [f_c(x) w(x), f_c(x) w(x) d/dc log f_c(x)].
template <class Weight>
auto scored_integrand(const ParametricFamily& family, const Vector& c, int dim, Weight&& weight) {
  return [&family, &c, dim, weight](double x) {
    QuadVector out = QuadVector::Zero(dim);
    const double lp = family.log_pdf(c, x);
    if (!std::isfinite(lp)) return out;
    const double w = weight(x);
    if (!(w > 0.0)) return out;
    const double v = std::exp(lp) * w;
    out[0] = v;
    if (v > 0.0) out.tail(dim - 1) = v * family.log_pdf_grad(c, x);
    return out;
  };
}

struct LinearIntegral {
  double value;
  Vector grad;
};

LinearIntegral weighted_density_quadrature(const ParametricFamily& family, const Vector& c,
                                           const WeightedDensity& comp,
                                           const QuadratureSpec& quad) {
  const int p = static_cast<int>(c.size());
  const int dim = p + 1;
  const Kernel& k = comp.kernel;
  const double restrict_lo = std::max({comp.lower, family.support_lower(), k.support_lower()});
  const double hi = k.upper_quantile(quad.tail_mass);
  LinearIntegral out{0.0, Vector::Zero(p)};

  double lo = restrict_lo;
  // Singular gamma kernel starting at its own left end: integrate the lower
  // half in probability space, int_0^{u_mid} f_c(Q(u)) du, which is smooth.
  if (k.singular_at_lower() && restrict_lo <= k.shift()) {
    const double x_mid = std::min(k.quantile(0.5), hi);
    const double u_mid = k.cdf(x_mid);
    auto f = [&](double u) {
      QuadVector v = QuadVector::Zero(dim);
      const double x = k.quantile(u);
      const double lp = family.log_pdf(c, x);
      if (!std::isfinite(lp)) return v;
      v[0] = std::exp(lp);
      if (v[0] > 0.0) v.tail(p) = v[0] * family.log_pdf_grad(c, x);
      return v;
    };
    const auto r = integrate_interval(f, 0.0, u_mid, dim, quad);
    if (!r.converged) quadrature_failure("kernel integral (probability space)", r);
    out.value += r.value[0];
    out.grad += r.value.tail(p);
    lo = x_mid;
  } else {
    lo = std::max(lo, k.quantile(quad.tail_mass));
  }

  if (lo < hi) {
    const auto breaks = kernel_breaks(k, lo, hi);
    auto f = scored_integrand(family, c, dim, [&k](double x) { return k.pdf(x); });
    const auto r = integrate_pieces(f, std::span<const double>(breaks), dim, quad);
    if (!r.converged) quadrature_failure("kernel integral", r);
    out.value += r.value[0];
    out.grad += r.value.tail(p);
  }
  out.value *= comp.weight;
  out.grad *= comp.weight;
  return out;
}

LinearIntegral cdf_ramp_quadrature(const ParametricFamily& family, const Vector& c,
                                   const CdfRamp& comp, const QuadratureSpec& quad) {
  if (!family.has_survival()) {
    throw DomainError("CDF ramp components need the analytic survival of '" + family.spec() +
                      "'");
  }
  const int p = static_cast<int>(c.size());
  const int dim = p + 1;
  const Kernel& k = comp.kernel;
  const double lo = std::max({family.support_lower(), k.support_lower(), k.quantile(quad.tail_mass)});
  const double hi = k.upper_quantile(quad.tail_mass);
  LinearIntegral out{0.0, Vector::Zero(p)};

  // Above hi the kernel CDF is 1 to within tail_mass: the remainder is S_c(top).
  const double top = std::max(lo, hi);
  const double log_s = family.log_sf(c, top);
  const double s = std::exp(log_s);
  out.value = s;
  if (s > 0.0) out.grad = s * family.log_sf_grad(c, top);

  if (lo < hi) {
    const auto breaks = kernel_breaks(k, lo, hi);
    auto f = scored_integrand(family, c, dim, [&k](double x) { return k.cdf(x); });
    const auto r = integrate_pieces(f, std::span<const double>(breaks), dim, quad);
    if (!r.converged) quadrature_failure("CDF ramp integral", r);
    out.value += r.value[0];
    out.grad += r.value.tail(p);
  }
  return out;
}

LogIntegral from_linear(const LinearIntegral& lin) {
  if (!(lin.value > 0.0)) return LogIntegral{-kInf, Vector::Zero(lin.grad.size())};
  return LogIntegral{std::log(lin.value), lin.grad / lin.value};
}

LogIntegral component_log_integral(const ParametricFamily& family, const Vector& c,
                                   const MeasureComponent& comp, const QuadratureSpec& quad) {
  const auto p = c.size();
  return std::visit(
      [&](const auto& m) -> LogIntegral {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DiracAtom>) {
          const double lp = family.log_pdf(c, m.location);
          if (!std::isfinite(lp)) return LogIntegral{-kInf, Vector::Zero(p)};
          return LogIntegral{lp, family.log_pdf_grad(c, m.location)};
        } else if constexpr (std::is_same_v<T, ConstantTail>) {
          if (!family.has_survival()) {
            throw DomainError("constant tail components need the analytic survival of '" +
                              family.spec() + "'");
          }
          if (m.height == 0.0) return LogIntegral{-kInf, Vector::Zero(p)};
          const double ls = family.log_sf(c, m.lower);
          if (!std::isfinite(ls)) return LogIntegral{-kInf, Vector::Zero(p)};
          return LogIntegral{std::log(m.height) + ls, family.log_sf_grad(c, m.lower)};
        } else if constexpr (std::is_same_v<T, WeightedDensity>) {
          if (m.weight == 0.0) return LogIntegral{-kInf, Vector::Zero(p)};
          if (auto closed = family.kernel_integral(c, m.kernel, m.lower)) {
            closed->log_value += std::log(m.weight);
            return *closed;
          }
          return from_linear(weighted_density_quadrature(family, c, m, quad));
        } else {
          return from_linear(cdf_ramp_quadrature(family, c, m, quad));
        }
      },
      comp);
}

}  // namespace

void QuadratureSpec::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw DomainError("quadrature tolerances must be > 0");
  if (max_subdivisions < 1) throw DomainError("quadrature needs max_subdivisions >= 1");
  if (!(tail_mass > 0.0 && tail_mass < 0.5)) {
    throw DomainError("quadrature tail mass must lie in (0, 0.5)");
  }
}

RandomMeasure::RandomMeasure(std::vector<MeasureComponent> components)
    : RandomMeasure(components, [&] {
        double lo = kInf;
        for (const auto& c : components) lo = std::min(lo, component_lower(c));
        return lo;
      }()) {}

RandomMeasure::RandomMeasure(std::vector<MeasureComponent> components, double support_lower)
    : components_(std::move(components)), support_lower_(support_lower) {
  if (components_.empty()) throw DomainError("a random measure needs at least one component");
  if (std::isnan(support_lower_)) throw DomainError("support lower bound is NaN");
  for (const auto& c : components_) {
    validate_component(c);
    if (component_lower(c) < support_lower_) {
      throw DomainError("measure component extends below the declared support");
    }
  }
}

double RandomMeasure::total_mass() const {
  double mass = 0.0;
  for (const auto& comp : components_) {
    if (const auto* d = std::get_if<DiracAtom>(&comp)) {
      (void)d;
      mass += 1.0;
    } else if (const auto* w = std::get_if<WeightedDensity>(&comp)) {
      mass += w->lower == -kInf ? w->weight : w->weight * w->kernel.survival(w->lower);
    } else if (std::holds_alternative<CdfRamp>(comp)) {
      return kInf;
    } else if (std::get<ConstantTail>(comp).height > 0.0) {
      return kInf;
    }
  }
  return mass;
}

double RandomMeasure::lebesgue_density(double x) const {
  double dens = 0.0;
  for (const auto& comp : components_) {
    if (const auto* w = std::get_if<WeightedDensity>(&comp)) {
      if (x >= w->lower) dens += w->weight * w->kernel.pdf(x);
    } else if (const auto* r = std::get_if<CdfRamp>(&comp)) {
      dens += r->kernel.cdf(x);
    } else if (const auto* t = std::get_if<ConstantTail>(&comp)) {
      if (x >= t->lower) dens += t->height;
    }
  }
  return dens;
}

RandomMeasure make_dirac(double location) {
  return RandomMeasure({DiracAtom{location}});
}

RandomMeasure make_density(const Kernel& kernel, double weight) {
  return RandomMeasure({WeightedDensity{weight, kernel}});
}

RandomMeasure make_right_censoring(double paid, bool observed) {
  if (!std::isfinite(paid)) throw DomainError("right-censoring point must be finite");
  if (observed) return make_dirac(paid);
  return RandomMeasure({ConstantTail{paid, 1.0}});
}

RandomMeasure make_measurement_uncertainty(const Kernel& kernel, bool indicator) {
  if (indicator) return make_density(kernel, 1.0);
  return RandomMeasure({CdfRamp{kernel}});
}

RandomMeasure make_gamma_bridge(double paid, double ultimate, double sigma2,
                                BridgeVariant variant) {
  if (!std::isfinite(paid) || !std::isfinite(ultimate)) {
    throw DomainError("bridge needs finite paid and ultimate amounts");
  }
  if (ultimate < paid) throw DomainError("bridge needs ultimate >= paid");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw DomainError("bridge needs sigma2 > 0");
  const double rate = 1.0 / sigma2;
  Kernel kernel = variant == BridgeVariant::A
                      ? Kernel::gamma((ultimate - paid + 1.0) * rate, rate, paid - 1.0)
                      : Kernel::gamma(ultimate * rate, rate, 0.0);
  return RandomMeasure({ConstantTail{paid, std::min(sigma2, 1.0)},
                        WeightedDensity{1.0, kernel, paid}},
                       paid);
}

LogIntegral integrate_log(const ParametricFamily& family, const Vector& c,
                          const RandomMeasure& measure, const QuadratureSpec& quad) {
  family.require_parameter(c);
  const auto& comps = measure.components();
  if (comps.size() == 1) return component_log_integral(family, c, comps.front(), quad);

  // log-sum-exp over components; the gradient is the mass-weighted average.
  std::vector<LogIntegral> parts;
  parts.reserve(comps.size());
  double top = -kInf;
  for (const auto& comp : comps) {
    parts.push_back(component_log_integral(family, c, comp, quad));
    top = std::max(top, parts.back().log_value);
  }
  if (top == -kInf) return LogIntegral{-kInf, Vector::Zero(c.size())};
  double sum = 0.0;
  Vector grad = Vector::Zero(c.size());
  for (const auto& part : parts) {
    if (part.log_value == -kInf) continue;
    const double w = std::exp(part.log_value - top);
    sum += w;
    grad += w * part.grad;
  }
  return LogIntegral{top + std::log(sum), grad / sum};
}

double integrate(const ParametricFamily& family, const Vector& c, const RandomMeasure& measure,
                 const QuadratureSpec& quad) {
  return std::exp(integrate_log(family, c, measure, quad).log_value);
}

}  // namespace icens
