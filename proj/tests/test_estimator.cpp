#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "icens/errors.hpp"
#include "icens/estimator.hpp"
#include "test_support.hpp"

using namespace icens;
using icens::test::rel_err;

namespace {

const ExponentialRate expo;
const NormalLocation normal1(1.0);

double fd_w(const ParametricFamily& f, double c, const RandomMeasure& m) {
  const double h = 1e-5 * std::max(1.0, std::abs(c));
  return (w_value(f, c + h, m) - w_value(f, c - h, m)) / (2 * h);
}

Sample gamma_sample(const std::vector<double>& xs, double s2) {
  Sample s;
  for (double x : xs) s.push_back(make_density(Kernel::gamma(x / s2, 1.0 / s2)));
  return s;
}

// Log-likelihood that ignores the parameter, so dZ/dc vanishes.
class Flat final : public ParametricFamily {
 public:
  std::string spec() const override { return "flat"; }
  double parameter_lower(std::size_t) const override { return -INFINITY; }
  double parameter_upper(std::size_t) const override { return INFINITY; }
  double support_lower() const override { return -INFINITY; }
  double log_pdf(const Vector&, double x) const override { return -0.5 * x * x; }
  Vector log_pdf_grad(const Vector&, double) const override { return Vector::Zero(1); }
  std::pair<double, double> default_bracket() const override { return {-1.0, 1.0}; }
};

}  // namespace

TEST_CASE("w_value examples") {
  const auto g = make_density(Kernel::gamma(1.0, 1.0));
  CHECK(w_value(expo, 1.0, g) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(w_value(expo, 1.7, make_dirac(0.4)) ==
        doctest::Approx(-std::log(1.7 * std::exp(-1.7 * 0.4))).epsilon(1e-14));
  const double u = 0.8, s = 1.5, c = -0.3;
  const double var = 1.0 + s * s;
  const double expected = 0.5 * std::log(2 * M_PI * var) + (u - c) * (u - c) / (2 * var);
  CHECK(w_value(normal1, c, make_density(Kernel::normal(u, s))) ==
        doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("w_value is infinite when the integral vanishes") {
  const ParetoTail pareto(1.0);
  CHECK(w_value(pareto, 1.0, make_dirac(0.5)) == INFINITY);
  CHECK_THROWS_AS(z_value(pareto, 1.0, make_dirac(0.5)), DomainError);
}

TEST_CASE("z_value examples") {
  // Internal convention Z = dW/dc: X/(1 + s2 c) - 1/c at c = X = s2 = 1.
  const auto g = make_density(Kernel::gamma(1.0, 1.0));
  CHECK(z_value(expo, 1.0, g) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(z_value(expo, 2.0, make_dirac(3.0)) == doctest::Approx(-(0.5 - 3.0)));
  CHECK(z_value(normal1, 0.7, make_density(Kernel::normal(0.7, 2.0))) ==
        doctest::Approx(0.0).scale(1.0));
  CHECK(z_value(normal1, 1.5, make_density(Kernel::normal(0.7, 2.0))) ==
        doctest::Approx((1.5 - 0.7) / 5.0).epsilon(1e-13));
  CHECK_THROWS_AS(z_value(expo, 0.0, g), DomainError);
}

TEST_CASE("z_value matches finite differences of w_value: 3 families x 4 kinds x 5 points") {
  const ParetoTail pareto(0.5);
  struct Case {
    const ParametricFamily* family;
    std::vector<RandomMeasure> measures;
    std::vector<double> points;
  };
  const std::vector<Case> cases = {
      {&normal1,
       {make_dirac(0.3), make_density(Kernel::normal(1.0, 0.7)), make_right_censoring(0.5, false),
        make_measurement_uncertainty(Kernel::normal(-0.5, 1.2), false)},
       {-2.0, -0.5, 0.0, 1.0, 3.0}},
      {&expo,
       {make_dirac(1.3), make_density(Kernel::gamma(2.0, 3.0)), make_right_censoring(0.8, false),
        make_measurement_uncertainty(Kernel::gamma(3.0, 2.0), false)},
       {0.1, 0.5, 1.0, 2.0, 6.0}},
      {&pareto,
       {make_dirac(1.7), make_density(Kernel::gamma(4.0, 2.0, 0.5)),
        make_right_censoring(2.0, false), make_gamma_bridge(0.8, 2.5, 0.3, BridgeVariant::A)},
       {0.2, 0.7, 1.3, 2.5, 5.0}}};
  int checked = 0;
  double worst = 0.0;
  for (const auto& cs : cases) {
    for (const auto& m : cs.measures) {
      for (double c : cs.points) {
        const double z = z_value(*cs.family, c, m);
        const double fd = fd_w(*cs.family, c, m);
        const double err = std::abs(z - fd) / std::max(std::abs(fd), 1e-3);
        worst = std::max(worst, err);
        ++checked;
      }
    }
  }
  CHECK(checked == 60);
  CHECK(worst < 1e-5);
}

TEST_CASE("generalized log-likelihood") {
  const std::vector<double> xs{0.3, 1.2, 2.7, 0.05};
  Sample dirac;
  double classical = 0.0;
  for (double x : xs) {
    dirac.push_back(make_dirac(x));
    classical += std::log(expo.density(0.9, x));
  }
  CHECK(generalized_loglik(expo, scalar_parameter(0.9), dirac).value ==
        doctest::Approx(classical).epsilon(1e-14));

  const Sample single{make_density(Kernel::gamma(1.0, 1.0))};
  CHECK(generalized_loglik(expo, scalar_parameter(1.0), single).value ==
        doctest::Approx(std::log(0.5)).epsilon(1e-14));

  const ParetoTail pareto(1.0);
  const Sample bad{make_dirac(2.0), make_dirac(0.5), make_dirac(0.7)};
  const auto ev = generalized_loglik(pareto, scalar_parameter(1.0), bad);
  CHECK(ev.value == -INFINITY);
  CHECK(ev.infinite_terms == 2);
}

TEST_CASE("right-censoring measures give the survival log-likelihood") {
  std::mt19937_64 rng(11);
  std::exponential_distribution<double> ex(1.0);
  std::bernoulli_distribution coin(0.6);
  const ParetoTail pareto(1.0);
  Sample sp, se;
  double lp = 0.0, le = 0.0;
  const double cp = 1.4, ce = 0.8;
  for (int i = 0; i < 200; ++i) {
    const double w = 1.0 + ex(rng);
    const bool d = coin(rng);
    sp.push_back(make_right_censoring(w, d));
    se.push_back(make_right_censoring(w - 1.0, d));
    lp += d ? std::log(pareto.density(cp, w)) : std::log(pareto.survival(cp, w));
    le += d ? std::log(expo.density(ce, w - 1.0)) : std::log(expo.survival(ce, w - 1.0));
  }
  CHECK(std::abs(generalized_loglik(pareto, scalar_parameter(cp), sp).value - lp) < 1e-9);
  CHECK(std::abs(generalized_loglik(expo, scalar_parameter(ce), se).value - le) < 1e-9);
}

TEST_CASE("Exp-Gamma root in closed form") {
  // mean X = 2.5, s2 = 0.5 -> c = 1 / (2.5 - 0.5).
  const auto r = fit(expo, gamma_sample({1.0, 2.0, 3.0, 4.0}, 0.5));
  CHECK(r.converged);
  CHECK(r.estimate[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.method == FitMethod::zroot);
  CHECK(r.n == 4);
}

TEST_CASE("Normal-Normal root is the mean of the centers for every spread") {
  for (double s : {0.0, 0.5, 2.0, 10.0}) {
    Sample sample;
    for (double u : {1.0, 2.0, 3.0}) {
      sample.push_back(s == 0.0 ? make_dirac(u) : make_density(Kernel::normal(u, s)));
    }
    const auto r = fit(normal1, sample);
    CHECK(std::abs(r.estimate[0] - 2.0) < 1e-10);
  }
}

TEST_CASE("fully observed Pareto sample gives the Hill-type estimator") {
  const ParetoTail pareto(0.5);
  const std::vector<double> xs{0.6, 0.9, 1.4, 3.0, 0.51, 7.5};
  Sample sample;
  double s = 0.0;
  for (double x : xs) {
    sample.push_back(make_dirac(x));
    s += std::log(x / 0.5);
  }
  const auto r = fit(pareto, sample);
  CHECK(r.estimate[0] == doctest::Approx(6.0 / s).epsilon(1e-11));
}

TEST_CASE("minimize and zroot agree on interior optima") {
  const ParetoTail pareto(1.0);
  const std::vector<std::pair<const ParametricFamily*, Sample>> problems = {
      {&expo, gamma_sample({0.4, 1.1, 2.9, 0.7, 1.6}, 0.3)},
      {&normal1, {make_density(Kernel::normal(0.2, 1.0)), make_dirac(1.9),
                  make_right_censoring(0.5, false), make_dirac(-0.4)}},
      {&pareto, {make_dirac(1.5), make_gamma_bridge(1.2, 3.0, 0.4, BridgeVariant::A),
                 make_gamma_bridge(2.0, 2.5, 2.0, BridgeVariant::B), make_dirac(4.0),
                 make_right_censoring(1.1, false)}}};
  for (const auto& [family, sample] : problems) {
    const auto a = fit(*family, sample, {}, {}, FitMethod::zroot);
    const auto b = fit(*family, sample, {}, {}, FitMethod::minimize);
    CHECK(a.converged);
    CHECK(b.converged);
    CHECK(std::abs(a.estimate[0] - b.estimate[0]) < 1e-7);
    CHECK(b.objective <= a.objective + 1e-9);
  }
}

TEST_CASE("root bracket expands toward the domain boundary") {
  OptimizerConfig config;
  config.bracket = std::make_pair(5.0, 6.0);
  const auto r = fit(expo, gamma_sample({10.0, 20.0}, 1.0), config);
  CHECK(r.estimate[0] == doctest::Approx(1.0 / 14.0).epsilon(1e-10));
  config.bracket = std::make_pair(1e-6, 1e-5);
  const auto q = fit(expo, gamma_sample({0.01, 0.02}, 0.001), config);
  CHECK(q.estimate[0] == doctest::Approx(1.0 / 0.014).epsilon(1e-10));
  CHECK(fit(normal1, {make_dirac(250.0)}).estimate[0] == doctest::Approx(250.0));
}

TEST_CASE("fit errors") {
  CHECK_THROWS_AS(fit(expo, Sample{}), DomainError);
  // Sum Z = n (x - 1/c) < 0 for x = 0: no root.
  CHECK_THROWS_AS(fit(expo, {make_dirac(0.0)}), ConvergenceError);
  OptimizerConfig bad;
  bad.bracket = std::make_pair(-1.0, 2.0);
  CHECK_THROWS_AS(fit(expo, {make_dirac(1.0)}, bad), DomainError);
  bad.bracket = std::make_pair(2.0, 1.0);
  CHECK_THROWS_AS(fit(expo, {make_dirac(1.0)}, bad), DomainError);
  OptimizerConfig tol;
  tol.param_tol = 0.0;
  CHECK_THROWS_AS(fit(expo, {make_dirac(1.0)}, tol), DomainError);
}

TEST_CASE("minimize reports a boundary optimum") {
  // All censored: the likelihood increases toward c -> 0.
  const auto r = fit(expo, {make_right_censoring(1.0, false), make_right_censoring(2.0, false)}, {},
                     {}, FitMethod::minimize);
  CHECK(r.at_boundary);
  CHECK_FALSE(r.converged);
  CHECK(r.estimate[0] < 1e-6);
}

TEST_CASE("two-parameter family via Nelder-Mead") {
  const icens::test::NormalLocationScale ls;
  const std::vector<double> xs{1.0, 2.0, 4.0, 7.0, 0.5};
  Sample sample;
  for (double x : xs) sample.push_back(make_dirac(x));
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / 5.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  OptimizerConfig config;
  Vector start(2);
  start << 0.0, 0.0;
  config.start = start;
  const auto r = fit(ls, sample, config, {}, FitMethod::minimize);
  CHECK(r.converged);
  CHECK(r.estimate[0] == doctest::Approx(mean).epsilon(1e-6));
  CHECK(r.estimate[1] == doctest::Approx(0.5 * std::log(ss / 5.0)).epsilon(1e-6));
  REQUIRE(r.sandwich);
  CHECK(r.sandwich->v.rows() == 2);
  CHECK(r.standard_errors.size() == 2);
  CHECK(r.sandwich->v(0, 1) == doctest::Approx(r.sandwich->v(1, 0)));

  CHECK_THROWS_AS(fit(ls, sample, config, {}, FitMethod::zroot), DomainError);
  CHECK_THROWS_AS(fit(ls, sample, {}, {}, FitMethod::minimize), DomainError);
}

TEST_CASE("sandwich for all-Dirac exponential samples is the classical one") {
  std::mt19937_64 rng(5);
  std::exponential_distribution<double> ex(0.5);
  Sample sample;
  std::vector<double> xs;
  for (int i = 0; i < 20000; ++i) {
    xs.push_back(ex(rng));
    sample.push_back(make_dirac(xs.back()));
  }
  const auto r = fit(expo, sample);
  REQUIRE(r.sandwich);
  const double c = r.estimate[0];
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  double j = 0.0;
  for (double x : xs) j += (x - 1.0 / c) * (x - 1.0 / c);
  j /= xs.size();
  CHECK(c == doctest::Approx(1.0 / mean).epsilon(1e-10));
  CHECK(r.sandwich->m(0, 0) == doctest::Approx(1.0 / (c * c)).epsilon(1e-6));
  CHECK(r.sandwich->j(0, 0) == doctest::Approx(j).epsilon(1e-10));
  CHECK(r.sandwich->v(0, 0) == doctest::Approx(j * std::pow(c, 4)).epsilon(1e-6));
  // V -> xi0^2 for the classical exponential MLE.
  CHECK(r.sandwich->v(0, 0) == doctest::Approx(0.25).epsilon(0.05));
  CHECK(r.standard_errors[0] == doctest::Approx(std::sqrt(r.sandwich->v(0, 0) / 20000.0)));
}

TEST_CASE("sandwich is invariant to sample order") {
  Sample sample = gamma_sample({0.4, 1.1, 2.9, 0.7, 1.6, 5.0, 0.2}, 0.3);
  const auto a = fit(expo, sample);
  std::reverse(sample.begin(), sample.end());
  std::rotate(sample.begin(), sample.begin() + 3, sample.end());
  const auto b = fit(expo, sample);
  CHECK(a.estimate[0] == doctest::Approx(b.estimate[0]).epsilon(1e-12));
  CHECK(a.sandwich->v(0, 0) == doctest::Approx(b.sandwich->v(0, 0)).epsilon(1e-9));
  CHECK(a.sandwich->m(0, 0) == doctest::Approx(b.sandwich->m(0, 0)).epsilon(1e-9));
  CHECK(a.sandwich->j(0, 0) == doctest::Approx(b.sandwich->j(0, 0)).epsilon(1e-12));
}

TEST_CASE("singular M is reported") {
  const Flat flat;
  const Sample sample{make_dirac(0.1), make_dirac(-0.3)};
  CHECK_THROWS_AS(sandwich(flat, scalar_parameter(0.0), sample), SingularMatrixError);
  const auto r = fit(flat, sample);
  CHECK_FALSE(r.sandwich);
  CHECK_FALSE(r.sandwich_error.empty());
  CHECK(r.standard_errors.size() == 0);
}

TEST_CASE("bootstrap") {
  SUBCASE("one replicate leaves the standard error undefined") {
    const auto b = bootstrap_se(expo, gamma_sample({1.0, 2.0, 3.0}, 0.2), 1, 3);
    CHECK(b.replicates == 1);
    CHECK_FALSE(b.standard_errors);
    CHECK_FALSE(b.lower);
  }
  SUBCASE("identical measures give a zero standard error") {
    const Sample same(10, make_density(Kernel::gamma(4.0, 2.0)));
    const auto b = bootstrap_se(expo, same, 20, 3);
    REQUIRE(b.standard_errors);
    CHECK((*b.standard_errors)[0] < 1e-12);
    CHECK((*b.lower)[0] == (*b.upper)[0]);
  }
  SUBCASE("classical exponential variance") {
    std::mt19937_64 rng(17);
    std::exponential_distribution<double> ex(2.0);
    Sample sample;
    for (int i = 0; i < 500; ++i) sample.push_back(make_dirac(ex(rng)));
    const auto b = bootstrap_se(expo, sample, 500, 99);
    const double c = fit(expo, sample).estimate[0];
    REQUIRE(b.standard_errors);
    CHECK((*b.standard_errors)[0] == doctest::Approx(c / std::sqrt(500.0)).epsilon(0.25));
    CHECK((*b.lower)[0] < c);
    CHECK((*b.upper)[0] > c);
    const auto again = bootstrap_se(expo, sample, 500, 99);
    CHECK((*again.standard_errors)[0] == (*b.standard_errors)[0]);
  }
  SUBCASE("too many failed refits abort") {
    // Most resamples of mostly censored data have no interior root.
    Sample sample(9, make_right_censoring(1.0, false));
    sample.push_back(make_dirac(0.5));
    CHECK_THROWS_AS(bootstrap_se(expo, sample, 30, 1), ConvergenceError);
  }
  CHECK_THROWS_AS(bootstrap_se(expo, Sample{make_dirac(1.0)}, 0, 1), DomainError);
}

TEST_CASE("amse") {
  CHECK(amse(0.25, 0.5, 0.5, 100) == doctest::Approx(0.0025));
  CHECK(amse(0.25, 0.5, 0.5, 1) == doctest::Approx(0.25));
  CHECK(amse(0.25, 0.7, 0.5, 1e15) == doctest::Approx(0.04).epsilon(1e-12));
  CHECK_THROWS_AS(amse(-1.0, 0.5, 0.5, 10), DomainError);
  CHECK_THROWS_AS(amse(1.0, 0.5, 0.5, 0.5), DomainError);
}

TEST_CASE("fit method names") {
  CHECK(parse_fit_method("zroot") == FitMethod::zroot);
  CHECK(std::string(to_string(FitMethod::minimize)) == "minimize");
  CHECK_THROWS_AS(parse_fit_method("newton"), DomainError);
}
