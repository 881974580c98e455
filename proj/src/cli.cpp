#include "icens/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "icens/closedform.hpp"
#include "icens/errors.hpp"
#include "icens/estimator.hpp"
#include "icens/montecarlo.hpp"
#include "icens/tailstudy.hpp"

namespace icens::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v[i]));
  return out;
}

std::string csv_number(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? format_number(*v) : std::string();
}

std::string csv_text(std::string s) {
  for (char& ch : s) {
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
  }
  return s;
}

// Writes next to the target and renames, so readers never see a partial file.
void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
    out.close();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw DataError("failed writing " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

struct PendingOutput {
  std::string path;  // empty: stdout
  std::string content;
};

void flush(const std::vector<PendingOutput>& outputs, std::ostream& out) {
  for (const auto& o : outputs) {
    if (o.path.empty()) {
      out << o.content;
    } else {
      write_atomic(o.path, o.content);
    }
  }
}

std::string sidecar_for(const std::string& output, const std::string& meta) {
  if (!meta.empty()) return meta;
  if (output.empty()) return {};
  fs::path p(output);
  p.replace_extension(".json");
  if (p == fs::path(output)) p += ".meta.json";
  return p.string();
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// `key = value` lines; '#' starts a comment. Returned as command-line tokens.
std::vector<std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path);
  std::vector<std::string> tokens;
  std::string line;
  std::size_t number = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError(path + ":" + std::to_string(number) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw DataError(path + ":" + std::to_string(number) + ": empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    while (!key.empty() && key.front() == '-') key.erase(0, 1);
    for (char& ch : key) {
      if (ch == '_') ch = '-';
    }
    tokens.push_back("--" + key);
    tokens.push_back(value);
  }
  return tokens;
}

struct Common {
  std::uint64_t seed = 1;
  double scale = 1e6;
};

struct Numerics {
  QuadratureSpec quad;
  OptimizerConfig optimizer;

  void add(CLI::App* app) {
    app->add_option("--rel-tol", quad.rel_tol, "quadrature relative tolerance");
    app->add_option("--abs-tol", quad.abs_tol, "quadrature absolute tolerance");
    app->add_option("--max-subdivisions", quad.max_subdivisions, "quadrature subdivision budget");
    app->add_option("--param-tol", optimizer.param_tol, "optimizer parameter tolerance");
    app->add_option("--max-iterations", optimizer.max_iterations, "optimizer iteration budget");
  }
};

struct ScenarioOptions {
  std::string name;
  double xi0 = kUnset;
  double sigma1 = 1.0;
  double epsilon = 0.0;
  double sigma2 = kUnset;
  double sigma = 0.0;
  double rho = 0.0;
  std::size_t k = 69;
  std::string variant = "A";
  double x0_scale = 0.05;
  double intensity = kUnset;
  double settled_fraction = 0.401;
  double noise_sd = 0.2;

  void add(CLI::App* app, bool with_tail_k) {
    app->add_option("--scenario", name, "exp-gamma, normal-normal or tail")
        ->check(CLI::IsMember({"exp-gamma", "normal-normal", "tail"}));
    app->add_option("--xi0", xi0, "true parameter");
    app->add_option("--sigma1", sigma1, "normal-normal model sd");
    app->add_option("--epsilon", epsilon, "normal-normal mean of the expert error");
    app->add_option("--sigma2", sigma2,
                    "exp-gamma/tail: expert variance scale; normal-normal: sd of the expert error");
    app->add_option("--sigma", sigma, "normal-normal expert spread");
    app->add_option("--rho", rho, "normal-normal correlation of X and the expert error");
    if (with_tail_k) app->add_option("--k", k, "tail sample size");
    app->add_option("--variant", variant, "bridging variant")->check(CLI::IsMember({"A", "B"}));
    app->add_option("--x0-scale", x0_scale, "tail: Pareto scale of ground-up claims");
    app->add_option("--intensity", intensity, "tail: censoring intensity");
    app->add_option("--settled-fraction", settled_fraction,
                    "tail: target settled fraction when --intensity is absent");
    app->add_option("--noise-sd", noise_sd, "tail: sd of the multiplicative expert error");
  }

  double sigma2_or(double fallback) const { return std::isnan(sigma2) ? fallback : sigma2; }

  Scenario build() const {
    if (name == "exp-gamma") {
      ExpGammaSpec s;
      s.xi0 = std::isnan(xi0) ? 0.5 : xi0;
      s.sigma2 = sigma2_or(0.0);
      s.validate();
      return s;
    }
    if (name == "normal-normal") {
      NormalNormalSpec s;
      s.xi0 = std::isnan(xi0) ? 0.0 : xi0;
      s.sigma1 = sigma1;
      s.epsilon = epsilon;
      s.sigma2 = sigma2_or(0.0);
      s.sigma = sigma;
      s.rho = rho;
      s.validate();
      return s;
    }
    if (name == "tail") {
      TailScenarioSpec s;
      s.synth.xi0 = std::isnan(xi0) ? 1.5 : xi0;
      s.synth.x0_scale = x0_scale;
      s.synth.noise_sd = noise_sd;
      s.synth.censoring_intensity = std::isnan(intensity)
                                        ? censoring_intensity_for(settled_fraction, s.synth.xi0)
                                        : intensity;
      s.k = k;
      s.sigma2 = sigma2_or(1.0);
      s.variant = parse_variant(variant);
      return s;
    }
    throw DomainError("a scenario is required (--scenario)");
  }
};

json scenario_json(const Scenario& scenario) {
  json j;
  j["name"] = scenario_name(scenario);
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ExpGammaSpec>) {
          j["xi0"] = s.xi0;
          j["sigma2"] = s.sigma2;
        } else if constexpr (std::is_same_v<T, NormalNormalSpec>) {
          j["xi0"] = s.xi0;
          j["sigma1"] = s.sigma1;
          j["epsilon"] = s.epsilon;
          j["sigma2"] = s.sigma2;
          j["sigma"] = s.sigma;
          j["rho"] = s.rho;
        } else {
          j["xi0"] = s.synth.xi0;
          j["x0_scale"] = s.synth.x0_scale;
          j["censoring_intensity"] = s.synth.censoring_intensity;
          j["noise_sd"] = s.synth.noise_sd;
          j["k"] = s.k;
          j["sigma2"] = s.sigma2;
          j["variant"] = to_string(s.variant);
        }
      },
      scenario);
  return j;
}

json fit_json(const FitResult& r) {
  json j;
  j["estimate"] = vector_json(r.estimate);
  j["standard_errors"] = r.standard_errors.size() > 0 ? vector_json(r.standard_errors) : json();
  j["n"] = r.n;
  j["method"] = to_string(r.method);
  j["converged"] = r.converged;
  j["at_boundary"] = r.at_boundary;
  j["iterations"] = r.iterations;
  j["objective"] = number(r.objective);
  if (r.sandwich) {
    j["sandwich"] = {{"m", matrix_json(r.sandwich->m)},
                     {"j", matrix_json(r.sandwich->j)},
                     {"v", matrix_json(r.sandwich->v)},
                     {"condition_number", number(r.sandwich->condition_number)}};
  } else {
    j["sandwich"] = nullptr;
    j["sandwich_error"] = r.sandwich_error;
  }
  return j;
}

template <class F>
json optional_index(F&& f) {
  try {
    const double c = f();
    return {{"xi", c}, {"tail_index", 1.0 / c}};
  } catch (const Error& e) {
    return {{"xi", nullptr}, {"tail_index", nullptr}, {"error", e.what()}};
  }
}

// ---------------------------------------------------------------------------

struct FitCommand {
  std::string claims;
  std::size_t k = 69;
  ScenarioOptions scenario;
  std::size_t n = 100;
  std::string method = "zroot";
  std::size_t bootstrap = 0;
  std::string output;
  Numerics numerics;

  void add(CLI::App* app) {
    app->add_option("--claims", claims, "claims CSV (id,paid,settled,ultimate)");
    app->add_option("--k", k, "tail sample size for claims input");
    scenario.add(app, false);
    app->add_option("--n", n, "sample size for scenario input");
    app->add_option("--method", method, "zroot or minimize")
        ->check(CLI::IsMember({"zroot", "minimize"}));
    app->add_option("--bootstrap", bootstrap, "bootstrap replicates (0 disables)");
    app->add_option("--output,-o", output, "JSON output path");
    numerics.add(app);
  }

  std::vector<PendingOutput> run(const Common& common) const {
    const FitMethod fm = parse_fit_method(method);
    json j;
    FamilyPtr family;
    Sample sample;
    OptimizerConfig optimizer = numerics.optimizer;
    if (!claims.empty()) {
      if (!scenario.name.empty()) throw DomainError("--claims and --scenario are exclusive");
      const ClaimsTable table = load_claims(claims, common.scale);
      const TailSelection sel = select_top_k(table.records, k);
      const double sigma2 = scenario.sigma2_or(1.0);
      const BridgeVariant variant = parse_variant(scenario.variant);
      family = std::make_shared<ParetoTail>(sel.x0);
      sample = tail_measures(sel.tail, sigma2, variant);
      optimizer.bracket = TailConfig::default_optimizer().bracket;
      j["source"] = "claims";
      j["claims"] = {{"records", table.records.size()},
                     {"rejected", table.rejected.size()},
                     {"settled_fraction", settled_fraction(table.records)}};
      j["k"] = k;
      j["x0"] = sel.x0;
      j["ties"] = sel.ties;
      j["sigma2"] = sigma2;
      j["variant"] = to_string(variant);
      j["baselines"] = {
          {"imputation", optional_index([&] { return imputation_index(sel.tail, sel.x0); })},
          {"survival", optional_index([&] { return survival_index(sel.tail, sel.x0); })}};
      json rejected = json::array();
      for (const auto& r : table.rejected) rejected.push_back({{"line", r.line}, {"message", r.message}});
      j["rejected_rows"] = rejected;
    } else if (!scenario.name.empty()) {
      const Scenario sc = scenario.build();
      SimulatedSample sim = simulate_scenario(sc, n, common.seed);
      family = sim.family;
      sample = std::move(sim.sample);
      if (std::holds_alternative<TailScenarioSpec>(sc)) {
        optimizer.bracket = TailConfig::default_optimizer().bracket;
      }
      j["source"] = "scenario";
      j["scenario"] = scenario_json(sc);
      j["seed"] = common.seed;
    } else {
      throw DomainError("fit needs --claims or --scenario");
    }
    j["family"] = family->spec();
    const FitResult r = fit(*family, sample, optimizer, numerics.quad, fm);
    j["fit"] = fit_json(r);
    if (bootstrap > 0) {
      const BootstrapResult b =
          bootstrap_se(*family, sample, bootstrap, common.seed, optimizer, numerics.quad, fm);
      j["bootstrap"] = {{"replicates", b.replicates},
                        {"failures", b.failures},
                        {"standard_errors", b.standard_errors ? vector_json(*b.standard_errors) : json()},
                        {"lower", b.lower ? vector_json(*b.lower) : json()},
                        {"upper", b.upper ? vector_json(*b.upper) : json()}};
    }
    return {{output, dump(j)}};
  }
};

struct CurveCommand {
  std::string claims;
  std::size_t k = 69;
  std::string grid = "1e-8:1e8:17:log";
  std::string variant = "A";
  std::string output;
  std::string meta;
  Numerics numerics;

  void add(CLI::App* app) {
    app->add_option("--claims", claims, "claims CSV (id,paid,settled,ultimate)")->required();
    app->add_option("--k", k, "tail sample size");
    app->add_option("--grid", grid, "sigma2 grid lo:hi:steps[:log]");
    app->add_option("--variant", variant, "bridging variant")->check(CLI::IsMember({"A", "B"}));
    app->add_option("--output,-o", output, "curve CSV path");
    app->add_option("--meta", meta, "metadata JSON path (default: output with .json)");
    numerics.add(app);
  }

  std::vector<PendingOutput> run(const Common& common) const {
    const ClaimsTable table = load_claims(claims, common.scale);
    TailConfig config;
    config.k = k;
    config.sigma2_grid = Axis::parse(grid).values;
    config.variant = parse_variant(variant);
    config.quad = numerics.quad;
    config.optimizer.param_tol = numerics.optimizer.param_tol;
    config.optimizer.max_iterations = numerics.optimizer.max_iterations;
    const TailSelection sel = select_top_k(table.records, k);
    const CurveResult curve = tail_curve(sel.tail, sel.x0, config);

    std::ostringstream csv;
    csv << "sigma2,xi,tail_index\n";
    for (const auto& p : curve.points) {
      csv << format_number(p.sigma2) << ',' << csv_number(p.xi) << ',' << csv_number(p.tail_index)
          << '\n';
    }
    json j;
    j["claims"] = {{"records", table.records.size()},
                   {"rejected", table.rejected.size()},
                   {"settled_fraction", settled_fraction(table.records)}};
    j["k"] = curve.k;
    j["x0"] = curve.x0;
    j["ties"] = sel.ties;
    j["variant"] = to_string(curve.variant);
    j["grid"] = config.sigma2_grid;
    j["baselines"] = {{"imputation", {{"xi", curve.imputation}, {"tail_index", 1.0 / curve.imputation}}},
                      {"survival", {{"xi", curve.survival}, {"tail_index", 1.0 / curve.survival}}}};
    json points = json::array();
    for (const auto& p : curve.points) {
      points.push_back({{"sigma2", p.sigma2},
                        {"xi", p.xi ? json(*p.xi) : json()},
                        {"iterations", p.iterations},
                        {"diagnostic", p.diagnostic}});
    }
    j["points"] = points;
    std::vector<PendingOutput> out{{output, csv.str()}};
    const std::string side = sidecar_for(output, meta);
    if (!side.empty()) {
      out.push_back({side, dump(j)});
    } else {
      out.push_back({"", dump(j)});
    }
    return out;
  }
};

struct SurfaceCommand {
  std::string kind = "sigma";
  double xi0 = 0.5;
  std::string rows;
  std::string grid;
  std::string output;
  std::string meta;

  void add(CLI::App* app) {
    app->add_option("--kind", kind, "sigma: sigma(e, n); n: n(n0, sigma)")
        ->check(CLI::IsMember({"sigma", "n"}));
    app->add_option("--xi0", xi0, "true exponential rate");
    app->add_option("--rows", rows, "row axis: e for sigma, n0 for n (lo:hi:steps[:log])");
    app->add_option("--grid", grid, "column axis: n for sigma, sigma for n (lo:hi:steps[:log])");
    app->add_option("--output,-o", output, "surface CSV path");
    app->add_option("--meta", meta, "metadata JSON path (default: output with .json)");
  }

  std::vector<PendingOutput> run(const Common&) const {
    const bool sigma_kind = kind == "sigma";
    const Axis r = Axis::parse(!rows.empty() ? rows : (sigma_kind ? "1.01:3:20" : "10:1000:20:log"));
    const Axis c = Axis::parse(!grid.empty() ? grid : (sigma_kind ? "10:1000:20:log" : "0.05:1:20"));
    const EfficiencySurface s =
        surface_grid(sigma_kind ? SurfaceKind::sigma_of_e_n : SurfaceKind::n_of_n0_sigma, r, c, xi0);
    std::ostringstream csv;
    csv << (sigma_kind ? "e,n,sigma\n" : "n0,sigma,n\n");
    json diagnostics = json::array();
    for (std::size_t i = 0; i < s.rows.values.size(); ++i) {
      for (std::size_t jx = 0; jx < s.columns.values.size(); ++jx) {
        csv << format_number(s.rows.values[i]) << ',' << format_number(s.columns.values[jx]) << ','
            << csv_number(s.values[i][jx]) << '\n';
        if (!s.diagnostics[i][jx].empty()) {
          diagnostics.push_back({{"row", s.rows.values[i]},
                                 {"column", s.columns.values[jx]},
                                 {"message", s.diagnostics[i][jx]}});
        }
      }
    }
    json j;
    j["kind"] = kind;
    j["xi0"] = xi0;
    j["rows"] = s.rows.values;
    j["columns"] = s.columns.values;
    j["diagnostics"] = diagnostics;
    std::vector<PendingOutput> out{{output, csv.str()}};
    const std::string side = sidecar_for(output, meta);
    if (!side.empty()) out.push_back({side, dump(j)});
    return out;
  }
};

struct SimulateCommand {
  ScenarioOptions scenario;
  std::size_t n = 100;
  std::size_t replications = 100;
  double ci_level = 0.95;
  std::string method = "zroot";
  std::string output;
  std::string table;

  void add(CLI::App* app) {
    scenario.add(app, true);
    app->add_option("--n", n, "sample size per replication");
    app->add_option("--replications,-R", replications, "number of replications");
    app->add_option("--ci-level", ci_level, "confidence level");
    app->add_option("--method", method, "zroot or minimize")
        ->check(CLI::IsMember({"zroot", "minimize"}));
    app->add_option("--output,-o", output, "summary JSON path");
    app->add_option("--table", table, "per-replication CSV path");
  }

  std::vector<PendingOutput> run(const Common& common) const {
    StudyConfig config;
    config.scenario = scenario.build();
    config.n = n;
    config.replications = replications;
    config.seed = common.seed;
    config.ci_level = ci_level;
    config.method = parse_fit_method(method);
    const StudySummary s = replicate(config);

    json j;
    j["scenario"] = scenario_json(config.scenario);
    j["n"] = n;
    j["replications"] = replications;
    j["seed"] = common.seed;
    j["ci_level"] = ci_level;
    j["method"] = to_string(config.method);
    j["summary"] = {{"truth", s.truth},
                    {"limit", s.limit ? json(*s.limit) : json()},
                    {"mean", number(s.mean)},
                    {"variance", number(s.variance)},
                    {"n_times_variance", number(static_cast<double>(n) * s.variance)},
                    {"mse_truth", number(s.mse_truth)},
                    {"mse_limit", s.mse_limit ? number(*s.mse_limit) : json()},
                    {"coverage", s.coverage ? json(*s.coverage) : json()},
                    {"mean_z", s.mean_z ? number(*s.mean_z) : json()},
                    {"mean_z_se", s.mean_z_se ? number(*s.mean_z_se) : json()},
                    {"failures", s.failures}};
    const double nd = static_cast<double>(n);
    if (const auto* eg = std::get_if<ExpGammaSpec>(&config.scenario)) {
      const auto ch = eg_characteristics(*eg);
      j["analytic"] = {{"xi", ch.xi}, {"v", ch.v}, {"v_display", ch.v_display},
                       {"amse", ch.amse(nd)}, {"amse_display", ch.amse_display(nd)}};
    } else if (const auto* nn = std::get_if<NormalNormalSpec>(&config.scenario)) {
      const auto ch = nn_characteristics(*nn);
      j["analytic"] = {{"xi", ch.xi}, {"v", ch.v}, {"amse", ch.amse(nd)}};
    }
    std::vector<PendingOutput> out{{output, dump(j)}};
    if (!table.empty()) {
      std::ostringstream csv;
      csv << "replication,seed,ok,estimate,standard_error,covered,error\n";
      for (const auto& r : s.records) {
        csv << r.index << ',' << r.seed << ',' << (r.ok ? 1 : 0) << ','
            << (r.ok ? format_number(r.estimate) : std::string()) << ','
            << (r.ok ? csv_number(r.standard_error) : std::string()) << ','
            << (r.covered ? (*r.covered ? "1" : "0") : "") << ',' << csv_text(r.error) << '\n';
      }
      out.push_back({table, csv.str()});
    }
    return out;
  }
};

struct SynthCommand {
  std::size_t n = 837;
  double xi0 = 1.5;
  double x0_scale = 0.05;
  double intensity = kUnset;
  double settled_fraction = 0.401;
  double noise_sd = 0.2;
  std::string output;

  void add(CLI::App* app) {
    app->add_option("--n", n, "number of claims");
    app->add_option("--xi0", xi0, "Pareto parameter of ground-up claims");
    app->add_option("--x0-scale", x0_scale, "Pareto scale (scaled units)");
    app->add_option("--intensity", intensity, "censoring intensity");
    app->add_option("--settled-fraction", settled_fraction,
                    "target settled fraction when --intensity is absent");
    app->add_option("--noise-sd", noise_sd, "sd of the multiplicative expert error");
    app->add_option("--output,-o", output, "claims CSV path");
  }

  std::vector<PendingOutput> run(const Common& common) const {
    SynthSpec spec;
    spec.n = n;
    spec.xi0 = xi0;
    spec.x0_scale = x0_scale;
    spec.noise_sd = noise_sd;
    spec.seed = common.seed;
    spec.censoring_intensity =
        std::isnan(intensity) ? censoring_intensity_for(settled_fraction, xi0) : intensity;
    const auto records = synthesize_claims(spec);
    std::ostringstream csv;
    write_claims(csv, records, common.scale);
    return {{output, csv.str()}};
  }
};

struct BridgePlotCommand {
  double paid = 1.0;
  double ultimate = 3.0;
  std::string sigma2_list = "0.01,0.1,1,10";
  std::string grid;
  std::string variant = "A";
  std::string output;

  void add(CLI::App* app) {
    app->add_option("--paid", paid, "paid amount W (model units)");
    app->add_option("--ultimate", ultimate, "ultimate Z (model units)");
    app->add_option("--sigma2-list", sigma2_list, "comma-separated sigma2 values");
    app->add_option("--grid", grid, "x axis lo:hi:steps[:log] (default W to W + 3 (Z - W + 1))");
    app->add_option("--variant", variant, "bridging variant")->check(CLI::IsMember({"A", "B"}));
    app->add_option("--output,-o", output, "density CSV path");
  }

  std::vector<PendingOutput> run(const Common&) const {
    std::vector<double> sigmas;
    std::stringstream ss(sigma2_list);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        sigmas.push_back(std::stod(item, &used));
        if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("");
      } catch (const std::logic_error&) {
        throw DomainError("invalid sigma2 value '" + item + "'");
      }
    }
    if (sigmas.empty()) throw DomainError("empty sigma2 list");
    const Axis x = grid.empty() ? Axis::linear(paid, paid + 3.0 * (ultimate - paid + 1.0), 301)
                                : Axis::parse(grid);
    const BridgeVariant v = parse_variant(variant);
    std::vector<RandomMeasure> measures;
    for (double s2 : sigmas) measures.push_back(make_gamma_bridge(paid, ultimate, s2, v));
    std::ostringstream csv;
    csv << "x,sigma2,density\n";
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
      for (double xv : x.values) {
        csv << format_number(xv) << ',' << format_number(sigmas[i]) << ','
            << format_number(measures[i].lebesgue_density(xv)) << '\n';
      }
    }
    return {{output, csv.str()}};
  }
};

void print_error(std::ostream& err, const std::string& kind, const std::string& message) {
  json j;
  j["error"] = {{"kind", kind}, {"message", message}};
  err << j.dump() << '\n';
}

// Moves --config out of the arguments and splices its tokens in right after
// the subcommand name so explicit flags, parsed later, take precedence.
std::vector<std::string> expand_config(std::vector<std::string> args,
                                       const std::vector<std::string>& subcommands) {
  std::string config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config needs a file name");
      config = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                 args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (config.empty()) return args;
  const auto tokens = read_config(config);
  auto pos = std::find_if(args.begin(), args.end(), [&](const std::string& a) {
    return std::find(subcommands.begin(), subcommands.end(), a) != subcommands.end();
  });
  if (pos == args.end()) return args;
  args.insert(pos + 1, tokens.begin(), tokens.end());
  return args;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Informed censoring estimation toolkit", "icens"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  app.add_option("--seed", common.seed, "master random seed");
  app.add_option("--scale", common.scale, "divisor applied to monetary columns");
  std::string config_unused;
  app.add_option("--config", config_unused, "file of 'key = value' lines");

  FitCommand fit_cmd;
  CurveCommand curve_cmd;
  SurfaceCommand surface_cmd;
  SimulateCommand simulate_cmd;
  SynthCommand synth_cmd;
  BridgePlotCommand bridge_cmd;
  auto* fit_app = app.add_subcommand("fit", "fit a family to claims or a simulated scenario");
  auto* curve_app = app.add_subcommand("curve", "tail index as a function of sigma2");
  auto* surface_app = app.add_subcommand("surface", "efficiency surfaces for the exp-gamma model");
  auto* simulate_app = app.add_subcommand("simulate", "Monte Carlo study of the estimator");
  auto* synth_app = app.add_subcommand("synth", "synthetic censored claims with ultimates");
  auto* bridge_app = app.add_subcommand("bridge-plot", "tabulated bridging densities");
  fit_cmd.add(fit_app);
  curve_cmd.add(curve_app);
  surface_cmd.add(surface_app);
  simulate_cmd.add(simulate_app);
  synth_cmd.add(synth_app);
  bridge_cmd.add(bridge_app);

  try {
    std::vector<std::string> args =
        expand_config(raw_args, {"fit", "curve", "surface", "simulate", "synth", "bridge-plot"});
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    print_error(err, "usage", e.what());
    return 2;
  } catch (const Error& e) {
    print_error(err, e.kind(), e.what());
    return 2;
  }

  try {
    if (!(common.scale > 0.0) || !std::isfinite(common.scale)) {
      throw DomainError("--scale must be positive");
    }
    std::vector<PendingOutput> outputs;
    if (fit_app->parsed()) {
      outputs = fit_cmd.run(common);
    } else if (curve_app->parsed()) {
      outputs = curve_cmd.run(common);
    } else if (surface_app->parsed()) {
      outputs = surface_cmd.run(common);
    } else if (simulate_app->parsed()) {
      outputs = simulate_cmd.run(common);
    } else if (synth_app->parsed()) {
      outputs = synth_cmd.run(common);
    } else {
      outputs = bridge_cmd.run(common);
    }
    flush(outputs, out);
  } catch (const Error& e) {
    print_error(err, e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error(err, "internal", e.what());
    return 1;
  }
  return 0;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace icens::cli
