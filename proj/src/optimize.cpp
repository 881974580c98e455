#include "icens/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "icens/errors.hpp"

namespace icens {
namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

ScalarSolution find_root(const std::function<double(double)>& f, double a, double b, double fa,
                         double fb, double xtol, int max_iterations) {
  ScalarSolution out;
  if (fa == 0.0) return {a, 0.0, 0, true};
  if (fb == 0.0) return {b, 0.0, 0, true};
  if (!std::isfinite(fa) || !std::isfinite(fb) || (fa > 0.0) == (fb > 0.0)) {
    throw ConvergenceError("root bracket does not contain a sign change");
  }
  auto tol = [xtol](double lo, double hi) {
    const double scale = std::min(std::abs(lo), std::abs(hi));
    return std::abs(hi - lo) <= std::max(xtol, 4.0 * std::numeric_limits<double>::epsilon() * scale);
  };
  std::uintmax_t iters = static_cast<std::uintmax_t>(max_iterations);
  const auto [lo, hi] = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
  const double flo = f(lo);
  const double fhi = f(hi);
  out.x = std::abs(flo) <= std::abs(fhi) ? lo : hi;
  out.value = std::abs(flo) <= std::abs(fhi) ? flo : fhi;
  if (flo != 0.0 && fhi != 0.0 && (flo > 0.0) != (fhi > 0.0)) {
    // Linear interpolation inside the final bracket.
    const double x = lo - flo * (hi - lo) / (fhi - flo);
    if (x >= lo && x <= hi) {
      const double fx = f(x);
      if (std::abs(fx) <= std::abs(out.value)) {
        out.x = x;
        out.value = fx;
      }
    }
  }
  out.iterations = static_cast<int>(iters);
  out.converged = iters < static_cast<std::uintmax_t>(max_iterations) || tol(lo, hi);
  return out;
}

ScalarSolution minimize_scalar(const std::function<double(double)>& f, double a, double b,
                               int max_iterations) {
  auto g = [&f](double x) {
    const double v = f(x);
    return std::isfinite(v) ? v : kInf;
  };
  std::uintmax_t iters = static_cast<std::uintmax_t>(max_iterations);
  const auto [x, fx] = boost::math::tools::brent_find_minima(
      g, a, b, std::numeric_limits<double>::digits / 2, iters);
  ScalarSolution out;
  out.x = x;
  out.value = fx;
  out.iterations = static_cast<int>(iters);
  out.converged = std::isfinite(fx) && iters < static_cast<std::uintmax_t>(max_iterations);
  return out;
}

SimplexSolution nelder_mead(const std::function<double(const Vector&)>& f, const Vector& x0,
                            const Vector& step, double xtol, double ftol, int max_iterations) {
  const Eigen::Index p = x0.size();
  auto eval = [&f](const Vector& x) {
    const double v = f(x);
    return std::isfinite(v) ? v : kInf;
  };
  std::vector<Vector> simplex(static_cast<std::size_t>(p + 1), x0);
  std::vector<double> values(simplex.size());
  for (Eigen::Index i = 0; i < p; ++i) simplex[static_cast<std::size_t>(i + 1)][i] += step[i];
  for (std::size_t i = 0; i < simplex.size(); ++i) values[i] = eval(simplex[i]);

  std::vector<std::size_t> order(simplex.size());
  SimplexSolution out;
  for (out.iterations = 0; out.iterations < max_iterations; ++out.iterations) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[order.size() - 2];

    double spread = 0.0;
    for (const auto& v : simplex) spread = std::max(spread, (v - simplex[best]).cwiseAbs().maxCoeff());
    if (spread <= xtol && std::abs(values[worst] - values[best]) <= ftol) {
      out.converged = true;
      break;
    }

    Vector centroid = Vector::Zero(p);
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i != worst) centroid += simplex[i];
    }
    centroid /= static_cast<double>(p);

    const Vector reflected = centroid + (centroid - simplex[worst]);
    const double fr = eval(reflected);
    if (fr < values[best]) {
      const Vector expanded = centroid + 2.0 * (centroid - simplex[worst]);
      const double fe = eval(expanded);
      if (fe < fr) {
        simplex[worst] = expanded;
        values[worst] = fe;
      } else {
        simplex[worst] = reflected;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = reflected;
      values[worst] = fr;
      continue;
    }
    const bool outside = fr < values[worst];
    const Vector contracted = outside ? Vector(centroid + 0.5 * (reflected - centroid))
                                      : Vector(centroid + 0.5 * (simplex[worst] - centroid));
    const double fc = eval(contracted);
    if (fc < (outside ? fr : values[worst])) {
      simplex[worst] = contracted;
      values[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i == best) continue;
      simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
      values[i] = eval(simplex[i]);
    }
  }
  const auto best = static_cast<std::size_t>(
      std::min_element(values.begin(), values.end()) - values.begin());
  out.x = simplex[best];
  out.value = values[best];
  if (!std::isfinite(out.value)) out.converged = false;
  return out;
}

}  // namespace icens
