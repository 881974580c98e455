#include "icens/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>

#include "icens/errors.hpp"
#include "icens/parallel.hpp"
#include "icens/rng.hpp"

namespace icens {

namespace {

constexpr std::size_t kBlock = 8192;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void validate_scenario(const Scenario& scenario) {
  std::visit(Overloaded{[](const NormalNormalSpec& s) { s.validate(); },
                        [](const ExpGammaSpec& s) { s.validate(); },
                        [](const TailScenarioSpec& s) {
                          s.synth.validate();
                          if (s.k < 2) throw DomainError("tail scenario needs k >= 2");
                          if (!(s.sigma2 > 0.0) || !std::isfinite(s.sigma2)) {
                            throw DomainError("tail scenario sigma2 must be positive");
                          }
                        }},
             scenario);
}

// One independent datapoint for the location and rate scenarios.
class PointSampler {
 public:
  explicit PointSampler(const Scenario& scenario) : scenario_(scenario) {
    if (std::holds_alternative<TailScenarioSpec>(scenario)) {
      throw DomainError("the tail scenario has no independent single-datapoint sampler");
    }
    if (const auto* nn = std::get_if<NormalNormalSpec>(&scenario)) {
      family_ = std::make_shared<NormalLocation>(nn->sigma1);
    } else {
      family_ = std::make_shared<ExponentialRate>();
    }
  }

  const FamilyPtr& family() const { return family_; }

  RandomMeasure draw(std::mt19937_64& rng) {
    if (const auto* eg = std::get_if<ExpGammaSpec>(&scenario_)) {
      const double x = std::exponential_distribution<double>(eg->xi0)(rng);
      if (eg->sigma2 == 0.0) return make_dirac(x);
      return make_density(Kernel::gamma(x / eg->sigma2, 1.0 / eg->sigma2));
    }
    const auto& nn = std::get<NormalNormalSpec>(scenario_);
    const double n1 = normal_(rng);
    const double n2 = normal_(rng);
    const double x = nn.xi0 + nn.sigma1 * n1;
    const double y = nn.epsilon + nn.sigma2 * (nn.rho * n1 + std::sqrt(1.0 - nn.rho * nn.rho) * n2);
    if (nn.sigma == 0.0) return make_dirac(x + y);
    return make_density(Kernel::normal(x + y, nn.sigma));
  }

 private:
  const Scenario& scenario_;
  FamilyPtr family_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;
};

MeanEstimate finish(const std::vector<Moments>& blocks) {
  Moments total;
  for (const auto& b : blocks) {
    total.sum += b.sum;
    total.sum_sq += b.sum_sq;
    total.count += b.count;
  }
  MeanEstimate out;
  out.draws = total.count;
  if (total.count == 0) return out;
  const double n = static_cast<double>(total.count);
  out.mean = total.sum / n;
  if (total.count > 1) {
    const double var = std::max(0.0, (total.sum_sq - n * out.mean * out.mean) / (n - 1.0));
    out.se = std::sqrt(var / n);
  }
  return out;
}

// Runs f(measure) over `draws` datapoints in seeded blocks.
template <class F>
MeanEstimate block_mean(const Scenario& scenario, std::size_t draws, std::uint64_t seed, F&& f) {
  validate_scenario(scenario);
  if (draws < 2) throw DomainError("need at least two draws");
  const std::size_t blocks = (draws + kBlock - 1) / kBlock;
  std::vector<Moments> moments(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    PointSampler sampler(scenario);
    std::mt19937_64 rng = make_stream(seed, b);
    const std::size_t end = std::min(draws, (b + 1) * kBlock);
    Moments& m = moments[b];
    for (std::size_t i = b * kBlock; i < end; ++i) {
      const RandomMeasure mu = sampler.draw(rng);
      const double v = f(*sampler.family(), mu);
      m.sum += v;
      m.sum_sq += v * v;
      ++m.count;
    }
  });
  return finish(moments);
}

}  // namespace

std::string scenario_name(const Scenario& scenario) {
  return std::visit(Overloaded{[](const NormalNormalSpec&) { return "normal-normal"; },
                               [](const ExpGammaSpec&) { return "exp-gamma"; },
                               [](const TailScenarioSpec&) { return "tail"; }},
                    scenario);
}

double scenario_truth(const Scenario& scenario) {
  return std::visit(Overloaded{[](const NormalNormalSpec& s) { return s.xi0; },
                               [](const ExpGammaSpec& s) { return s.xi0; },
                               [](const TailScenarioSpec& s) { return s.synth.xi0; }},
                    scenario);
}

std::optional<double> scenario_limit(const Scenario& scenario) {
  return std::visit(
      Overloaded{[](const NormalNormalSpec& s) -> std::optional<double> {
                   return nn_characteristics(s).xi;
                 },
                 [](const ExpGammaSpec& s) -> std::optional<double> {
                   return eg_characteristics(s).xi;
                 },
                 [](const TailScenarioSpec&) -> std::optional<double> { return std::nullopt; }},
      scenario);
}

SimulatedSample simulate_scenario(const Scenario& scenario, std::size_t n, std::uint64_t seed) {
  validate_scenario(scenario);
  if (n < 1) throw DomainError("n must be positive");
  SimulatedSample out;
  if (const auto* tail = std::get_if<TailScenarioSpec>(&scenario)) {
    SynthSpec synth = tail->synth;
    synth.n = n;
    synth.seed = seed;
    const TailSelection sel = select_top_k(synthesize_claims(synth), tail->k);
    out.family = std::make_shared<ParetoTail>(sel.x0);
    out.sample = tail_measures(sel.tail, tail->sigma2, tail->variant);
    return out;
  }
  PointSampler sampler(scenario);
  std::mt19937_64 rng = make_stream(seed, 0);
  out.family = sampler.family();
  out.sample.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.sample.push_back(sampler.draw(rng));
  return out;
}

void StudyConfig::validate() const {
  validate_scenario(scenario);
  if (n < 2) throw DomainError("n must be at least 2");
  if (replications < 1) throw DomainError("replications must be at least 1");
  if (!(ci_level > 0.0 && ci_level < 1.0)) throw DomainError("ci level must lie in (0, 1)");
}

StudySummary replicate(const StudyConfig& config) {
  config.validate();
  const std::size_t r_count = config.replications;
  const std::optional<double> limit = scenario_limit(config.scenario);
  const double z_crit =
      boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + 0.5 * config.ci_level);
  OptimizerConfig optimizer;
  if (std::holds_alternative<TailScenarioSpec>(config.scenario)) {
    optimizer = TailConfig::default_optimizer();
  }

  std::vector<ReplicationRecord> records(r_count);
  std::vector<Moments> z_moments(r_count);
  parallel_for(r_count, [&](std::size_t i) {
    ReplicationRecord& rec = records[i];
    rec.index = i;
    rec.seed = derive_seed(config.seed, i);
    try {
      const SimulatedSample sim = simulate_scenario(config.scenario, config.n, rec.seed);
      const FitResult fr = fit(*sim.family, sim.sample, optimizer, {}, config.method);
      if (!fr.converged) {
        rec.error = "fit did not converge";
        return;
      }
      rec.ok = true;
      rec.estimate = fr.estimate[0];
      rec.standard_error = fr.standard_errors.size() > 0
                               ? fr.standard_errors[0]
                               : std::numeric_limits<double>::quiet_NaN();
      if (limit && std::isfinite(rec.standard_error)) {
        rec.covered = std::abs(rec.estimate - *limit) <= z_crit * rec.standard_error;
      }
      if (limit) {
        Moments& m = z_moments[i];
        for (const auto& mu : sim.sample) {
          const double z = z_value(*sim.family, *limit, mu);
          m.sum += z;
          m.sum_sq += z * z;
          ++m.count;
        }
      }
    } catch (const Error& e) {
      rec.ok = false;
      rec.error = e.what();
    }
  });

  StudySummary out;
  out.replications = r_count;
  out.truth = scenario_truth(config.scenario);
  out.limit = limit;
  std::size_t ok = 0;
  std::size_t with_ci = 0;
  std::size_t covered = 0;
  double sum = 0.0;
  for (const auto& rec : records) {
    if (!rec.ok) {
      ++out.failures;
      continue;
    }
    ++ok;
    sum += rec.estimate;
    if (rec.covered) {
      ++with_ci;
      if (*rec.covered) ++covered;
    }
  }
  if (out.failures * 10 > r_count) {
    throw ConvergenceError(std::to_string(out.failures) + " of " + std::to_string(r_count) +
                           " replications failed; first error: " +
                           std::find_if(records.begin(), records.end(), [](const auto& r) {
                             return !r.ok;
                           })->error);
  }
  if (ok == 0) throw ConvergenceError("every replication failed");
  const double k = static_cast<double>(ok);
  out.mean = sum / k;
  double ss = 0.0;
  double mse0 = 0.0;
  double mse1 = 0.0;
  for (const auto& rec : records) {
    if (!rec.ok) continue;
    ss += (rec.estimate - out.mean) * (rec.estimate - out.mean);
    mse0 += (rec.estimate - out.truth) * (rec.estimate - out.truth);
    if (limit) mse1 += (rec.estimate - *limit) * (rec.estimate - *limit);
  }
  out.variance = ok > 1 ? ss / (k - 1.0) : 0.0;
  out.mse_truth = mse0 / k;
  if (limit) out.mse_limit = mse1 / k;
  if (with_ci > 0) out.coverage = static_cast<double>(covered) / static_cast<double>(with_ci);
  if (limit) {
    const MeanEstimate z = finish(z_moments);
    if (z.draws > 1) {
      out.mean_z = z.mean;
      out.mean_z_se = z.se;
    }
  }
  out.records = std::move(records);
  return out;
}

MeanEstimate mean_z_at(const Scenario& scenario, double c, std::size_t draws, std::uint64_t seed) {
  return block_mean(scenario, draws, seed, [c](const ParametricFamily& family,
                                               const RandomMeasure& mu) {
    return z_value(family, c, mu);
  });
}

MMatrixCheck verify_m_matrix(const Scenario& scenario, double c, double step, std::size_t draws,
                             std::uint64_t seed) {
  validate_scenario(scenario);
  if (!(step > 0.0) || !std::isfinite(step)) throw DomainError("step must be positive");
  MMatrixCheck out;
  if (const auto* eg = std::get_if<ExpGammaSpec>(&scenario)) {
    const auto ch = eg_characteristics(*eg);
    out.display = ch.m_display;
    out.verified = ch.m;
  } else if (const auto* nn = std::get_if<NormalNormalSpec>(&scenario)) {
    const auto ch = nn_characteristics(*nn);
    out.display = ch.m;
    out.verified = ch.m;
  } else {
    throw DomainError("no closed-form M for the tail scenario");
  }
  // Both sides use the same datapoint, so the sampling noise largely cancels.
  const MeanEstimate slope = block_mean(
      scenario, draws, seed, [c, step](const ParametricFamily& family, const RandomMeasure& mu) {
        return (z_value(family, c + step, mu) - z_value(family, c - step, mu)) / (2.0 * step);
      });
  out.slope = slope.mean;
  out.slope_se = slope.se;
  const double mag = std::abs(out.slope);
  // slack for the finite-difference truncation error when the SE vanishes
  const double band = 4.0 * out.slope_se + 1e-6 * std::max(1.0, mag);
  out.matches_display = std::abs(mag - std::abs(out.display)) <= band;
  out.matches_verified = std::abs(mag - std::abs(out.verified)) <= band;
  const double gap = std::abs(std::abs(out.display) - std::abs(out.verified));
  if (gap > 0.0 && 8.0 * out.slope_se > gap) {
    out.inconclusive = true;
    const double ratio = 8.0 * out.slope_se / gap;
    out.required_draws =
        static_cast<std::size_t>(std::ceil(static_cast<double>(draws) * ratio * ratio)) + 1;
  }
  return out;
}

}  // namespace icens
