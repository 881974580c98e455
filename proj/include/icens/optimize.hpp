#pragma once

#include <functional>

#include "icens/models.hpp"

namespace icens {

struct ScalarSolution {
  double x = 0.0;
  double value = 0.0;  // f(x)
  int iterations = 0;
  bool converged = false;
};

// Bracketed root of f on [a, b] (TOMS 748). Requires f(a), f(b) of opposite
// sign or one of them zero; stops when the bracket is narrower than
// max(xtol, 4 eps |x|).
ScalarSolution find_root(const std::function<double(double)>& f, double a, double b, double fa,
                         double fb, double xtol, int max_iterations);

// Brent's golden-section / parabolic minimization on [a, b]. Non-finite
// objective values are treated as +inf.
ScalarSolution minimize_scalar(const std::function<double(double)>& f, double a, double b,
                               int max_iterations);

struct SimplexSolution {
  Vector x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Nelder-Mead simplex minimization from x0 with per-coordinate initial steps.
SimplexSolution nelder_mead(const std::function<double(const Vector&)>& f, const Vector& x0,
                            const Vector& step, double xtol, double ftol, int max_iterations);

}  // namespace icens
