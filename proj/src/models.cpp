#include "icens/models.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "icens/errors.hpp"

namespace icens {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kSqrt2 = 1.41421356237309504880;

double fd_step(double c) { return 1e-6 * std::max(std::abs(c), 1.0); }

template <class F>
Vector central_difference(const Vector& c, F&& f) {
  Vector grad(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const double h = fd_step(c[i]);
    Vector up = c;
    Vector down = c;
    up[i] += h;
    down[i] -= h;
    grad[i] = (f(up) - f(down)) / (2.0 * h);
  }
  return grad;
}

// log of the standard normal upper tail probability.
double log_normal_sf(double z) {
  if (z < 30.0) return std::log(0.5 * std::erfc(z / kSqrt2));
  // Asymptotic Mills ratio expansion.
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return -0.5 * z2 - kLogSqrt2Pi - std::log(z) + std::log(series);
}

struct SpecCall {
  std::string name;
  std::map<std::string, double> args;
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

SpecCall parse_call(std::string_view text) {
  SpecCall call;
  const std::string s = trim(text);
  const auto open = s.find('(');
  if (open == std::string::npos) {
    call.name = s;
    return call;
  }
  if (s.back() != ')') throw DomainError("malformed specification '" + s + "'");
  call.name = trim(std::string_view(s).substr(0, open));
  std::string_view body = std::string_view(s).substr(open + 1, s.size() - open - 2);
  while (!trim(body).empty()) {
    const auto comma = body.find(',');
    const std::string_view item = body.substr(0, comma);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw DomainError("expected key=value in specification '" + s + "'");
    }
    const std::string key = trim(item.substr(0, eq));
    const std::string value = trim(item.substr(eq + 1));
    double parsed = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), parsed);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
      throw DomainError("invalid number '" + value + "' in specification '" + s + "'");
    }
    call.args[key] = parsed;
    if (comma == std::string_view::npos) break;
    body.remove_prefix(comma + 1);
  }
  return call;
}

double take_arg(SpecCall& call, const std::string& key) {
  const auto it = call.args.find(key);
  if (it == call.args.end()) {
    throw DomainError("family '" + call.name + "' requires argument '" + key + "'");
  }
  const double v = it->second;
  call.args.erase(it);
  return v;
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

// ----------------------------------------------------------------------------
// ParametricFamily

Vector ParametricFamily::log_pdf_grad(const Vector& c, double x) const {
  return central_difference(c, [&](const Vector& p) { return log_pdf(p, x); });
}

double ParametricFamily::log_sf(const Vector&, double) const {
  throw DomainError("family '" + spec() + "' has no analytic survival function");
}

Vector ParametricFamily::log_sf_grad(const Vector& c, double x) const {
  return central_difference(c, [&](const Vector& p) { return log_sf(p, x); });
}

std::optional<LogIntegral> ParametricFamily::kernel_integral(const Vector&, const Kernel&,
                                                             double) const {
  return std::nullopt;
}

bool ParametricFamily::contains(const Vector& c) const {
  if (static_cast<std::size_t>(c.size()) != dimension()) return false;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (!std::isfinite(c[i]) || !(c[i] > parameter_lower(k)) || !(c[i] < parameter_upper(k))) {
      return false;
    }
  }
  return true;
}

void ParametricFamily::require_parameter(const Vector& c) const {
  if (static_cast<std::size_t>(c.size()) != dimension()) {
    throw DomainError("parameter has dimension " + std::to_string(c.size()) + ", family '" +
                      spec() + "' expects " + std::to_string(dimension()));
  }
  if (!contains(c)) {
    std::string text;
    for (Eigen::Index i = 0; i < c.size(); ++i) text += (i ? "," : "") + format_number(c[i]);
    throw DomainError("parameter (" + text + ") outside the domain of '" + spec() + "'");
  }
}

double ParametricFamily::density(const Vector& c, double x) const {
  require_parameter(c);
  return std::exp(log_pdf(c, x));
}

double ParametricFamily::survival(const Vector& c, double x) const {
  require_parameter(c);
  return std::exp(log_sf(c, x));
}

double ParametricFamily::cdf(const Vector& c, double x) const {
  require_parameter(c);
  return -std::expm1(log_sf(c, x));
}

Vector ParametricFamily::log_density_grad(const Vector& c, double x) const {
  require_parameter(c);
  if (x < support_lower() || !std::isfinite(log_pdf(c, x))) {
    throw DomainError("score requested at x=" + format_number(x) + " outside the support of '" +
                      spec() + "'");
  }
  return log_pdf_grad(c, x);
}

// ----------------------------------------------------------------------------
// NormalLocation

NormalLocation::NormalLocation(double sigma1) : sigma1_(sigma1) {
  if (!std::isfinite(sigma1) || !(sigma1 > 0.0)) {
    throw DomainError("normal family requires sigma1 > 0");
  }
}

std::string NormalLocation::spec() const { return "normal(sigma1=" + format_number(sigma1_) + ")"; }
double NormalLocation::parameter_lower(std::size_t) const { return -kInf; }
double NormalLocation::parameter_upper(std::size_t) const { return kInf; }
double NormalLocation::support_lower() const { return -kInf; }

double NormalLocation::log_pdf(const Vector& c, double x) const {
  const double z = (x - c[0]) / sigma1_;
  return -0.5 * z * z - kLogSqrt2Pi - std::log(sigma1_);
}

Vector NormalLocation::log_pdf_grad(const Vector& c, double x) const {
  return scalar_parameter((x - c[0]) / (sigma1_ * sigma1_));
}

double NormalLocation::log_sf(const Vector& c, double x) const {
  return log_normal_sf((x - c[0]) / sigma1_);
}

Vector NormalLocation::log_sf_grad(const Vector& c, double x) const {
  // d/dc log S = f_c(x) / S_c(x).
  const double z = (x - c[0]) / sigma1_;
  const double log_phi = -0.5 * z * z - kLogSqrt2Pi;
  return scalar_parameter(std::exp(log_phi - log_normal_sf(z)) / sigma1_);
}

std::optional<LogIntegral> NormalLocation::kernel_integral(const Vector& c, const Kernel& k,
                                                           double lower) const {
  if (!k.is_normal() || lower > -kInf) return std::nullopt;
  const auto& n = k.normal_shape();
  const double var = sigma1_ * sigma1_ + n.sd * n.sd;
  const double d = n.mean - c[0];
  return LogIntegral{-0.5 * d * d / var - kLogSqrt2Pi - 0.5 * std::log(var),
                     scalar_parameter(d / var)};
}

std::pair<double, double> NormalLocation::default_bracket() const { return {-10.0, 10.0}; }

// ----------------------------------------------------------------------------
// ExponentialRate

std::string ExponentialRate::spec() const { return "exp"; }
double ExponentialRate::parameter_lower(std::size_t) const { return 0.0; }
double ExponentialRate::parameter_upper(std::size_t) const { return kInf; }
double ExponentialRate::support_lower() const { return 0.0; }

double ExponentialRate::log_pdf(const Vector& c, double x) const {
  if (x < 0.0) return -kInf;
  return std::log(c[0]) - c[0] * x;
}

Vector ExponentialRate::log_pdf_grad(const Vector& c, double x) const {
  return scalar_parameter(1.0 / c[0] - x);
}

double ExponentialRate::log_sf(const Vector& c, double x) const {
  return x <= 0.0 ? 0.0 : -c[0] * x;
}

Vector ExponentialRate::log_sf_grad(const Vector&, double x) const {
  return scalar_parameter(x <= 0.0 ? 0.0 : -x);
}

std::optional<LogIntegral> ExponentialRate::kernel_integral(const Vector& c, const Kernel& k,
                                                            double lower) const {
  // int c e^{-cx} Gamma(x - s; a, b) dx = e^{-cs} c (b / (b + c))^a for s >= 0.
  if (!k.is_gamma() || k.shift() < 0.0 || lower > k.shift()) return std::nullopt;
  const auto& g = k.gamma_shape();
  const double rate = c[0];
  const double s = k.shift();
  const double log_value = std::log(rate) - rate * s - g.shape * std::log1p(rate / g.rate);
  return LogIntegral{log_value, scalar_parameter(1.0 / rate - s - g.shape / (g.rate + rate))};
}

std::pair<double, double> ExponentialRate::default_bracket() const { return {1e-3, 1e3}; }

// ----------------------------------------------------------------------------
// ParetoTail

ParetoTail::ParetoTail(double x0) : x0_(x0) {
  if (!std::isfinite(x0) || !(x0 > 0.0)) throw DomainError("pareto family requires x0 > 0");
}

std::string ParetoTail::spec() const { return "pareto(x0=" + format_number(x0_) + ")"; }
double ParetoTail::parameter_lower(std::size_t) const { return 0.0; }
double ParetoTail::parameter_upper(std::size_t) const { return kInf; }
double ParetoTail::support_lower() const { return x0_; }

double ParetoTail::log_pdf(const Vector& c, double x) const {
  if (x < x0_) return -kInf;
  return std::log(c[0]) - std::log(x0_) - (c[0] + 1.0) * std::log(x / x0_);
}

Vector ParetoTail::log_pdf_grad(const Vector& c, double x) const {
  return scalar_parameter(1.0 / c[0] - std::log(x / x0_));
}

double ParetoTail::log_sf(const Vector& c, double x) const {
  return x <= x0_ ? 0.0 : -c[0] * std::log(x / x0_);
}

Vector ParetoTail::log_sf_grad(const Vector&, double x) const {
  return scalar_parameter(x <= x0_ ? 0.0 : -std::log(x / x0_));
}

std::pair<double, double> ParetoTail::default_bracket() const { return {1e-3, 1e3}; }

// ----------------------------------------------------------------------------

FamilyPtr parse_family(std::string_view spec) {
  SpecCall call = parse_call(spec);
  FamilyPtr family;
  if (call.name == "normal") {
    family = std::make_shared<NormalLocation>(take_arg(call, "sigma1"));
  } else if (call.name == "exp") {
    family = std::make_shared<ExponentialRate>();
  } else if (call.name == "pareto") {
    family = std::make_shared<ParetoTail>(take_arg(call, "x0"));
  } else {
    throw DomainError("unknown family '" + call.name + "'");
  }
  if (!call.args.empty()) {
    throw DomainError("unexpected argument '" + call.args.begin()->first + "' for family '" +
                      call.name + "'");
  }
  return family;
}

}  // namespace icens
