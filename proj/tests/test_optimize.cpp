#include <doctest.h>

#include <cmath>

#include "icens/errors.hpp"
#include "icens/optimize.hpp"

using namespace icens;

TEST_CASE("bracketed root") {
  auto f = [](double x) { return std::cos(x) - x; };
  const auto r = find_root(f, 0.0, 1.0, f(0.0), f(1.0), 1e-14, 200);
  CHECK(r.converged);
  CHECK(r.x == doctest::Approx(0.7390851332151607).epsilon(1e-14));
}

TEST_CASE("root at an endpoint") {
  auto f = [](double x) { return x - 1.0; };
  const auto r = find_root(f, 1.0, 3.0, 0.0, 2.0, 1e-12, 100);
  CHECK(r.x == 1.0);
}

TEST_CASE("no sign change raises") {
  auto f = [](double x) { return x * x + 1.0; };
  CHECK_THROWS_AS(find_root(f, -1.0, 1.0, 2.0, 2.0, 1e-12, 100), ConvergenceError);
}

TEST_CASE("scalar minimization") {
  const auto r = minimize_scalar([](double x) { return (x - 2.0) * (x - 2.0) + 1.0; }, -5.0, 10.0,
                                 200);
  CHECK(r.converged);
  CHECK(r.x == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(r.value == doctest::Approx(1.0));
}

TEST_CASE("non-finite objective values act as walls") {
  const auto r = minimize_scalar(
      [](double x) { return x <= 0.0 ? std::nan("") : x - std::log(x); }, -3.0, 5.0, 200);
  CHECK(r.x == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("Nelder-Mead on the Rosenbrock function") {
  Vector x0(2), step(2);
  x0 << -1.2, 1.0;
  step << 0.5, 0.5;
  const auto r = nelder_mead(
      [](const Vector& v) {
        return 100.0 * std::pow(v[1] - v[0] * v[0], 2) + std::pow(1.0 - v[0], 2);
      },
      x0, step, 1e-10, 1e-14, 5000);
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-5));
}
