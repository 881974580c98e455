#include "icens/kernel.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "icens/errors.hpp"

namespace icens {
namespace {

using namespace boost::math::policies;
using QuietPolicy = policy<overflow_error<ignore_error>, underflow_error<ignore_error>,
                           denorm_error<ignore_error>, evaluation_error<ignore_error>>;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

}  // namespace

Kernel Kernel::normal(double mean, double sd) {
  if (!std::isfinite(mean) || !std::isfinite(sd) || !(sd > 0.0)) {
    throw DomainError("normal kernel requires finite mean and sd > 0");
  }
  return Kernel(NormalShape{mean, sd}, 0.0);
}

Kernel Kernel::gamma(double shape, double rate, double shift) {
  if (!std::isfinite(shape) || !std::isfinite(rate) || !(shape > 0.0) || !(rate > 0.0)) {
    throw DomainError("gamma kernel requires finite shape > 0 and rate > 0");
  }
  if (!std::isfinite(shift)) throw DomainError("gamma kernel shift must be finite");
  return Kernel(GammaShape{shape, rate}, shift);
}

double Kernel::support_lower() const noexcept { return is_normal() ? -kInf : shift_; }

bool Kernel::singular_at_lower() const noexcept {
  return is_gamma() && gamma_shape().shape < 1.0;
}

double Kernel::pdf(double x) const {
  if (const auto* n = std::get_if<NormalShape>(&shape_)) {
    const double z = (x - n->mean) / n->sd;
    return std::exp(-0.5 * z * z - kLogSqrt2Pi) / n->sd;
  }
  const auto& g = gamma_shape();
  const double t = x - shift_;
  if (t < 0.0) return 0.0;
  if (t == 0.0) {
    if (g.shape < 1.0) return kInf;
    return g.shape == 1.0 ? g.rate : 0.0;
  }
  return boost::math::gamma_p_derivative(g.shape, g.rate * t, QuietPolicy()) * g.rate;
}

double Kernel::log_pdf(double x) const {
  if (const auto* n = std::get_if<NormalShape>(&shape_)) {
    const double z = (x - n->mean) / n->sd;
    return -0.5 * z * z - kLogSqrt2Pi - std::log(n->sd);
  }
  const auto& g = gamma_shape();
  const double t = x - shift_;
  if (t < 0.0) return -kInf;
  const double p = pdf(x);
  if (p > 0.0) return std::log(p);
  if (t == 0.0) return -kInf;
  return (g.shape - 1.0) * std::log(t) + g.shape * std::log(g.rate) - g.rate * t -
         std::lgamma(g.shape);
}

double Kernel::cdf(double x) const {
  if (const auto* n = std::get_if<NormalShape>(&shape_)) {
    return 0.5 * std::erfc(-(x - n->mean) / (n->sd * kSqrt2));
  }
  const auto& g = gamma_shape();
  const double t = x - shift_;
  if (t <= 0.0) return 0.0;
  if (t == kInf) return 1.0;
  return boost::math::gamma_p(g.shape, g.rate * t, QuietPolicy());
}

double Kernel::survival(double x) const {
  if (const auto* n = std::get_if<NormalShape>(&shape_)) {
    return 0.5 * std::erfc((x - n->mean) / (n->sd * kSqrt2));
  }
  const auto& g = gamma_shape();
  const double t = x - shift_;
  if (t <= 0.0) return 1.0;
  if (t == kInf) return 0.0;
  return boost::math::gamma_q(g.shape, g.rate * t, QuietPolicy());
}

double Kernel::quantile(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("quantile level outside [0, 1]");
  if (u == 0.0) return support_lower();
  if (u == 1.0) return kInf;
  if (u > 0.5) return upper_quantile(1.0 - u);
  if (const auto* n = std::get_if<NormalShape>(&shape_)) {
    return n->mean - n->sd * kSqrt2 * boost::math::erfc_inv(2.0 * u, QuietPolicy());
  }
  const auto& g = gamma_shape();
  return shift_ + boost::math::gamma_p_inv(g.shape, u, QuietPolicy()) / g.rate;
}

double Kernel::upper_quantile(double q) const {
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile level outside [0, 1]");
  if (q == 0.0) return kInf;
  if (q == 1.0) return support_lower();
  if (const auto* n = std::get_if<NormalShape>(&shape_)) {
    return n->mean + n->sd * kSqrt2 * boost::math::erfc_inv(2.0 * q, QuietPolicy());
  }
  const auto& g = gamma_shape();
  return shift_ + boost::math::gamma_q_inv(g.shape, q, QuietPolicy()) / g.rate;
}

double Kernel::mean() const noexcept {
  if (const auto* n = std::get_if<NormalShape>(&shape_)) return n->mean;
  const auto& g = gamma_shape();
  return shift_ + g.shape / g.rate;
}

double Kernel::variance() const noexcept {
  if (const auto* n = std::get_if<NormalShape>(&shape_)) return n->sd * n->sd;
  const auto& g = gamma_shape();
  return g.shape / (g.rate * g.rate);
}

std::string Kernel::describe() const {
  std::ostringstream os;
  os.precision(17);
  if (const auto* n = std::get_if<NormalShape>(&shape_)) {
    os << "normal(mean=" << n->mean << ",sd=" << n->sd << ")";
  } else {
    const auto& g = gamma_shape();
    os << "gamma(shape=" << g.shape << ",rate=" << g.rate << ",shift=" << shift_ << ")";
  }
  return os.str();
}

}  // namespace icens
