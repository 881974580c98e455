#include <doctest.h>

#include <cmath>
#include <limits>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "icens/errors.hpp"
#include "icens/measure.hpp"
#include "test_support.hpp"

using namespace icens;
using icens::test::QuadratureOnly;
using icens::test::rel_err;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const auto expo = std::make_shared<ExponentialRate>();
const auto normal1 = std::make_shared<NormalLocation>(1.0);

double phi_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Independent oracle: Boost adaptive Gauss-Kronrod on [a, inf).
template <class F>
double oracle(F f, double a, double b = kInf) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 25, 1e-13);
}

}  // namespace

TEST_CASE("Dirac measure") {
  const auto m = make_dirac(2.0);
  REQUIRE(m.components().size() == 1);
  CHECK(std::get<DiracAtom>(m.components()[0]).location == 2.0);
  CHECK(m.total_mass() == 1.0);
  CHECK(integrate(*expo, 1.0, m) == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(make_dirac(kInf), DomainError);
  CHECK_THROWS_AS(make_dirac(std::nan("")), DomainError);
}

TEST_CASE("right censoring") {
  const auto observed = make_right_censoring(1.0, true);
  CHECK(std::holds_alternative<DiracAtom>(observed.components()[0]));
  const auto censored = make_right_censoring(1.0, false);
  const auto& tail = std::get<ConstantTail>(censored.components()[0]);
  CHECK(tail.lower == 1.0);
  CHECK(tail.height == 1.0);
  CHECK(censored.total_mass() == kInf);
  CHECK(integrate(*expo, 2.0, censored) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
}

TEST_CASE("right censoring integrates to the survival function") {
  const ParetoTail pareto(0.7);
  for (double w : {0.7, 1.0, 3.0, 40.0}) {
    for (double c : {0.3, 1.0, 4.0}) {
      const auto m = make_right_censoring(w, false);
      CHECK(rel_err(integrate(*expo, c, m), expo->survival(c, w)) < 1e-9);
      CHECK(rel_err(integrate(*normal1, c, m), normal1->survival(c, w)) < 1e-9);
      CHECK(rel_err(integrate(pareto, c, m), pareto.survival(c, w)) < 1e-9);
    }
  }
}

TEST_CASE("Pareto against a constant tail") {
  const ParetoTail pareto(1.0);
  const RandomMeasure m({ConstantTail{2.0, 1.0}});
  CHECK(integrate(pareto, 1.0, m) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("measurement uncertainty with a normal kernel against Exp(1)") {
  const auto k = Kernel::normal(1.0, 0.2);
  const auto m = make_measurement_uncertainty(k, true);
  CHECK(m.total_mass() == doctest::Approx(1.0));
  const double value = integrate(*expo, 1.0, m);
  // Exponential support truncates the Gaussian at 0.
  const double exact = std::exp(-1.0 + 0.02) * phi_cdf((1.0 - 0.04) / 0.2);
  CHECK(rel_err(value, exact) < 1e-9);
  CHECK(value == doctest::Approx(0.37531).epsilon(1e-5));
  CHECK(make_measurement_uncertainty(k, false).total_mass() == kInf);
}

TEST_CASE("vanishing kernel spread tends to the density at the center") {
  const auto m = make_measurement_uncertainty(Kernel::normal(1.0, 1e-6), true);
  CHECK(rel_err(integrate(*expo, 1.0, m), std::exp(-1.0)) < 1e-9);
  const auto g = make_density(Kernel::gamma(1.0 / 1e-10, 1.0 / 1e-10));
  CHECK(rel_err(integrate(*expo, 2.0, g), 2.0 * std::exp(-2.0)) < 1e-8);
}

TEST_CASE("CDF ramp for the normal location family") {
  // int phi(x; c, s1) Phi((x - m) / s) dx = Phi((c - m) / sqrt(s1^2 + s^2)).
  const NormalLocation fam(1.5);
  for (double c : {-1.0, 0.3, 2.0}) {
    const auto m = make_measurement_uncertainty(Kernel::normal(0.5, 0.8), false);
    const double exact = phi_cdf((c - 0.5) / std::sqrt(1.5 * 1.5 + 0.64));
    CHECK(rel_err(integrate(fam, c, m), exact) < 1e-9);
  }
}

TEST_CASE("CDF ramp with a gamma kernel against an independent oracle") {
  const auto k = Kernel::gamma(3.0, 2.0);
  const boost::math::gamma_distribution<double> g(3.0, 0.5);
  const auto m = make_measurement_uncertainty(k, false);
  for (double c : {0.2, 1.0, 5.0}) {
    const double ref = oracle([&](double x) { return c * std::exp(-c * x) * boost::math::cdf(g, x); },
                              0.0);
    CHECK(rel_err(integrate(*expo, c, m), ref) < 1e-9);
  }
}

TEST_CASE("Exp-Gamma closed form") {
  const auto m = make_density(Kernel::gamma(1.0, 1.0));
  CHECK(integrate(*expo, 1.0, m) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("registered closed forms agree with quadrature") {
  const QuadratureOnly qexp(expo);
  const QuadratureOnly qnorm(normal1);
  for (double c : {0.3, 1.0, 2.5}) {
    for (double x : {0.2, 1.0, 4.0}) {
      for (double s2 : {0.01, 0.5, 3.0}) {
        const auto g = make_density(Kernel::gamma(x / s2, 1.0 / s2));
        const auto a = integrate_log(*expo, scalar_parameter(c), g);
        const auto b = integrate_log(qexp, scalar_parameter(c), g);
        CHECK(a.log_value == doctest::Approx(b.log_value).epsilon(1e-9));
        CHECK(a.grad[0] == doctest::Approx(b.grad[0]).epsilon(1e-8));

        const auto n = make_density(Kernel::normal(x, std::sqrt(s2)));
        const auto an = integrate_log(*normal1, scalar_parameter(c), n);
        const auto bn = integrate_log(qnorm, scalar_parameter(c), n);
        CHECK(an.log_value == doctest::Approx(bn.log_value).epsilon(1e-9));
        CHECK(an.grad[0] == doctest::Approx(bn.grad[0]).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("restricted, shifted gamma kernel closed form agrees with quadrature") {
  const QuadratureOnly qexp(expo);
  for (double lower : {0.5, 2.0, 6.0}) {
    const RandomMeasure m({WeightedDensity{1.0, Kernel::gamma(3.0, 1.5, 0.5), lower}});
    for (double c : {0.4, 1.7}) {
      const auto a = integrate_log(*expo, scalar_parameter(c), m);
      const auto b = integrate_log(qexp, scalar_parameter(c), m);
      CHECK(a.log_value == doctest::Approx(b.log_value).epsilon(1e-9));
      CHECK(a.grad[0] == doctest::Approx(b.grad[0]).epsilon(1e-8));
    }
  }
}

TEST_CASE("gamma bridge parametrization") {
  const auto m = make_gamma_bridge(1.0, 3.0, 0.25, BridgeVariant::A);
  REQUIRE(m.components().size() == 2);
  const auto& tail = std::get<ConstantTail>(m.components()[0]);
  const auto& dens = std::get<WeightedDensity>(m.components()[1]);
  CHECK(tail.lower == 1.0);
  CHECK(tail.height == 0.25);
  CHECK(dens.kernel.gamma_shape().shape == doctest::Approx(12.0));
  CHECK(dens.kernel.gamma_shape().rate == doctest::Approx(4.0));
  CHECK(dens.kernel.shift() == 0.0);
  CHECK(dens.lower == 1.0);
  CHECK(m.total_mass() == kInf);
  CHECK(make_gamma_bridge(1.0, 3.0, 0.5, BridgeVariant::A).total_mass() == kInf);

  const auto b = make_gamma_bridge(2.0, 5.0, 0.5, BridgeVariant::B);
  const auto& kb = std::get<WeightedDensity>(b.components()[1]).kernel;
  CHECK(kb.mean() == doctest::Approx(5.0));
  CHECK(kb.variance() == doctest::Approx(2.5));
  CHECK(std::get<ConstantTail>(make_gamma_bridge(1, 2, 7.0, BridgeVariant::B).components()[0])
            .height == 1.0);
  CHECK(b.lebesgue_density(1.9) == 0.0);
  CHECK(b.lebesgue_density(2.0) > 0.5);

  CHECK_THROWS_AS(make_gamma_bridge(2.0, 1.0, 0.5, BridgeVariant::A), DomainError);
  CHECK_THROWS_AS(make_gamma_bridge(1.0, 2.0, 0.0, BridgeVariant::A), DomainError);
  CHECK_THROWS_AS(make_gamma_bridge(1.0, 2.0, -1.0, BridgeVariant::B), DomainError);
}

TEST_CASE("gamma bridge limits for Pareto test points") {
  for (double x0 : {0.1, 1.0}) {
    const ParetoTail pareto(x0);
    for (auto variant : {BridgeVariant::A, BridgeVariant::B}) {
      for (double w_ratio : {1.0, 1.5, 4.0}) {
        for (double z_ratio : {1.0, 2.0, 10.0}) {
          const double w = x0 * w_ratio;
          const double z = w * z_ratio;
          for (double c : {0.5, 1.5, 3.0}) {
            const double small = integrate(pareto, c, make_gamma_bridge(w, z, 1e-8, variant));
            // At Z = W only the upper half of the concentrating kernel is kept,
            // and the error decays like the kernel sd rather than its variance.
            const double expected = (z == w ? 0.5 : 1.0) * pareto.density(c, z);
            CHECK(rel_err(small, expected) < (z == w ? 1e-2 : 1e-3));
            const double large = integrate(pareto, c, make_gamma_bridge(w, z, 1e8, variant));
            CHECK(rel_err(large, pareto.survival(c, w)) < 1e-3);
          }
        }
      }
    }
  }
}

TEST_CASE("gamma bridge against an independent oracle") {
  const ParetoTail pareto(1.0);
  const double w = 1.5;
  const double z = 4.0;
  for (double s2 : {0.05, 1.0, 10.0}) {
    const double c = 1.3;
    const boost::math::gamma_distribution<double> g((z - w + 1) / s2, s2);
    const double dens = oracle(
        [&](double x) { return pareto.density(c, x) * boost::math::pdf(g, x - w + 1.0); }, w,
        w + 2.0 * (z - w + 1.0)) + oracle(
        [&](double x) { return pareto.density(c, x) * boost::math::pdf(g, x - w + 1.0); },
        w + 2.0 * (z - w + 1.0));
    const double ref = dens + std::min(s2, 1.0) * pareto.survival(c, w);
    const double got = integrate(pareto, c, make_gamma_bridge(w, z, s2, BridgeVariant::A));
    CHECK(rel_err(got, ref) < 1e-8);
  }
}

TEST_CASE("integration is linear in the measure") {
  const ParetoTail pareto(1.0);
  const WeightedDensity d{0.3, Kernel::gamma(2.0, 1.0, 1.0)};
  const ConstantTail t{2.0, 0.7};
  const CdfRamp r{Kernel::normal(3.0, 0.5)};
  const double c = 1.2;
  const double sum = integrate(pareto, c, RandomMeasure({d})) +
                     integrate(pareto, c, RandomMeasure({t})) +
                     integrate(pareto, c, RandomMeasure({r}));
  CHECK(rel_err(integrate(pareto, c, RandomMeasure({d, t, r})), sum) < 1e-9);
}

TEST_CASE("proper measures integrate below the density supremum") {
  const double c = 0.8;
  for (double mean : {0.5, 2.0, 7.0}) {
    for (double sd : {0.1, 1.0, 3.0}) {
      const auto m = make_density(Kernel::normal(mean, sd));
      const double v = integrate(*normal1, c, m);
      CHECK(v > 0.0);
      CHECK(v <= normal1->density(c, c));
      const double ve = integrate(*expo, c, make_density(Kernel::gamma(mean, 1.0 / sd)));
      CHECK(ve > 0.0);
      CHECK(ve <= c);
    }
  }
}

TEST_CASE("total mass") {
  CHECK(make_density(Kernel::gamma(2.0, 1.0)).total_mass() == doctest::Approx(1.0));
  CHECK(RandomMeasure({WeightedDensity{0.4, Kernel::normal(0, 1)}, DiracAtom{1.0}}).total_mass() ==
        doctest::Approx(1.4));
  CHECK(RandomMeasure({ConstantTail{1.0, 0.0}, DiracAtom{2.0}}).total_mass() == 1.0);
  const RandomMeasure restricted({WeightedDensity{1.0, Kernel::normal(0, 1), 0.0}});
  CHECK(restricted.total_mass() == doctest::Approx(0.5));
}

TEST_CASE("invalid measures") {
  CHECK_THROWS_AS(RandomMeasure(std::vector<MeasureComponent>{}), DomainError);
  CHECK_THROWS_AS(RandomMeasure({WeightedDensity{-0.1, Kernel::normal(0, 1)}}), DomainError);
  CHECK_THROWS_AS(RandomMeasure({ConstantTail{-kInf, 1.0}}), DomainError);
  CHECK_THROWS_AS(RandomMeasure({ConstantTail{0.0, -1.0}}), DomainError);
  CHECK_THROWS_AS(RandomMeasure({DiracAtom{0.5}}, 1.0), DomainError);
  CHECK_THROWS_AS(Kernel::normal(0.0, 0.0), DomainError);
  CHECK_THROWS_AS(Kernel::gamma(-1.0, 1.0), DomainError);
}

TEST_CASE("parameter outside Xi") {
  CHECK_THROWS_AS(integrate(*expo, -1.0, make_dirac(1.0)), DomainError);
  CHECK_THROWS_AS(integrate(*expo, 0.0, make_dirac(1.0)), DomainError);
}

TEST_CASE("families without survival reject improper components") {
  const icens::test::NormalLocationScale ls;
  Vector c(2);
  c << 0.0, 0.0;
  CHECK_THROWS_AS(integrate(ls, c, make_right_censoring(1.0, false)), DomainError);
  CHECK(integrate(ls, c, make_dirac(0.0)) == doctest::Approx(0.3989422804014327));
}

TEST_CASE("quadrature failure is reported") {
  QuadratureSpec tight;
  tight.max_subdivisions = 1;
  tight.rel_tol = 1e-15;
  tight.abs_tol = 1e-300;
  const QuadratureOnly qexp(expo);
  const auto m = make_density(Kernel::normal(50.0, 20.0));
  CHECK_THROWS_AS(integrate(qexp, 1.0, m, tight), QuadratureError);
}
