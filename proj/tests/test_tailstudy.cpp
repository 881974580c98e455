#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "icens/errors.hpp"
#include "icens/tailstudy.hpp"

using namespace icens;

namespace {

std::filesystem::path tmpdir() {
  std::filesystem::path p = ICENS_TEST_TMPDIR;
  std::filesystem::create_directories(p);
  return p;
}

ClaimRecord settled(double w) { return {"s", w, true, w}; }
ClaimRecord open(double w, double z) { return {"o", w, false, z}; }

std::vector<ClaimRecord> fixture(std::uint64_t seed = 7, double noise = 0.2) {
  SynthSpec s;
  s.censoring_intensity = censoring_intensity_for(0.401, s.xi0);
  s.noise_sd = noise;
  s.seed = seed;
  return synthesize_claims(s);
}

}  // namespace

TEST_CASE("parse claims") {
  std::istringstream in(
      "id,paid,settled,ultimate\n"
      "a,2.5,1,2.5\n"
      "b,1.0,0,3.0\n"
      "c,4.0,0,3.0\n"
      "d,-1,1,-1\n"
      "e,2.0,1,2.5\n");
  const auto t = parse_claims(in);
  REQUIRE(t.records.size() == 2);
  CHECK(t.records[1].id == "b");
  CHECK(t.records[1].ultimate == 3.0);
  REQUIRE(t.rejected.size() == 3);
  CHECK(t.rejected[0].line == 4);
  CHECK(t.rejected[1].line == 5);
  CHECK(t.rejected[2].line == 6);

  std::istringstream scaled("id,paid,settled,ultimate\nx,2000000,0,5000000\n");
  const auto s = parse_claims(scaled, 1e6);
  CHECK(s.records[0].paid == 2.0);
  CHECK(s.records[0].ultimate == 5.0);
}

TEST_CASE("parse claims errors") {
  std::istringstream empty("");
  CHECK_THROWS_AS(parse_claims(empty), DataError);
  std::istringstream header_only("id,paid,settled,ultimate\n");
  CHECK_THROWS_AS(parse_claims(header_only), DataError);
  std::istringstream bad_header("id,paid,ultimate\na,1,1\n");
  CHECK_THROWS_AS(parse_claims(bad_header), DataError);
  std::istringstream malformed("id,paid,settled,ultimate\na,1.0,1,1.0\nb,x,1,1\n");
  CHECK_THROWS_AS(parse_claims(malformed), DataError);
  std::istringstream bad_flag("id,paid,settled,ultimate\na,1.0,2,1.0\n");
  CHECK_THROWS_AS(parse_claims(bad_flag), DataError);
  std::istringstream short_row("id,paid,settled,ultimate\na,1.0,1\n");
  CHECK_THROWS_AS(parse_claims(short_row), DataError);
  std::istringstream all_bad("id,paid,settled,ultimate\na,1.0,0,0.5\n");
  CHECK_THROWS_AS(parse_claims(all_bad), DataError);
  CHECK_THROWS_AS(load_claims(tmpdir() / "does_not_exist.csv"), DataError);
}

TEST_CASE("fixture round trip") {
  const auto records = fixture();
  CHECK(records.size() == 837);
  const double frac = settled_fraction(records);
  CHECK(std::abs(frac - 0.401) < 0.05);

  const auto path = tmpdir() / "fixture.csv";
  {
    std::ofstream out(path);
    write_claims(out, records, 1e6);
  }
  const auto t = load_claims(path, 1e6);
  REQUIRE(t.records.size() == 837);
  CHECK(t.rejected.empty());
  CHECK(settled_fraction(t.records) == frac);
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(t.records[i].id == records[i].id);
    CHECK(t.records[i].settled == records[i].settled);
    CHECK(t.records[i].paid == doctest::Approx(records[i].paid).epsilon(1e-14));
  }
}

TEST_CASE("top-k selection") {
  std::vector<ClaimRecord> r;
  for (double w : {3.0, 5.0, 1.0, 4.0, 2.0}) r.push_back(settled(w));
  const auto sel = select_top_k(r, 2);
  CHECK(sel.x0 == 3.0);
  REQUIRE(sel.tail.size() == 2);
  CHECK(sel.tail[0].paid == 5.0);
  CHECK(sel.tail[1].paid == 4.0);
  CHECK_FALSE(sel.ties);
  CHECK_THROWS_AS(select_top_k(r, 5), DataError);

  std::vector<ClaimRecord> same;
  for (int i = 0; i < 4; ++i) same.push_back({"id" + std::to_string(i), 2.0, true, 2.0});
  const auto tied = select_top_k(same, 2);
  CHECK(tied.x0 == 2.0);
  CHECK(tied.tail[0].id == "id0");
  CHECK(tied.tail[1].id == "id1");
  CHECK(tied.ties);

  const auto big = select_top_k(fixture(), 69);
  CHECK(big.tail.size() == 69);
  for (const auto& rec : big.tail) CHECK(rec.paid >= big.x0);
}

TEST_CASE("baseline indices") {
  const double x0 = 0.7;
  const double ex = std::exp(1.0) * x0;
  CHECK(imputation_index({open(ex, ex), open(ex, ex)}, x0) == doctest::Approx(1.0));
  CHECK(survival_index({settled(ex), open(ex, ex)}, x0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(survival_index({open(ex, ex), open(ex, 2 * ex)}, x0), DomainError);
  CHECK_THROWS_AS(imputation_index({settled(x0), settled(x0)}, x0), DomainError);
  CHECK_THROWS_AS(imputation_index({open(0.5 * x0, 0.5 * x0)}, x0), DomainError);

  std::vector<ClaimRecord> all;
  for (double w : {1.0, 2.0, 3.5, 9.0}) all.push_back(settled(w));
  const double hill = 4.0 / (std::log(1.0 / 0.9) + std::log(2.0 / 0.9) + std::log(3.5 / 0.9) +
                             std::log(9.0 / 0.9));
  CHECK(imputation_index(all, 0.9) == doctest::Approx(hill).epsilon(1e-14));
  CHECK(survival_index(all, 0.9) == doctest::Approx(hill).epsilon(1e-14));
}

TEST_CASE("synthesis") {
  SynthSpec s;
  s.n = 500;
  s.censoring_intensity = 0.0;
  s.seed = 3;
  for (const auto& r : synthesize_claims(s)) {
    CHECK(r.settled);
    CHECK(r.ultimate == r.paid);
  }

  // Zero noise: open ultimates are the true sizes, identical to a shared-seed
  // uncensored draw.
  s.censoring_intensity = 5.0;
  s.noise_sd = 0.0;
  const auto censored = synthesize_claims(s);
  s.censoring_intensity = 0.0;
  const auto uncensored = synthesize_claims(s);
  std::size_t open_claims = 0;
  for (std::size_t i = 0; i < censored.size(); ++i) {
    validate_claim(censored[i]);
    if (!censored[i].settled) {
      ++open_claims;
      CHECK(censored[i].ultimate == uncensored[i].ultimate);
      CHECK(censored[i].paid < censored[i].ultimate);
    }
  }
  CHECK(open_claims > 0);

  s.censoring_intensity = 1.0;
  s.noise_sd = 0.3;
  const auto a = synthesize_claims(s);
  const auto b = synthesize_claims(s);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].paid == b[i].paid);
    CHECK(a[i].ultimate == b[i].ultimate);
  }
  s.n = 0;
  CHECK_THROWS_AS(synthesize_claims(s), DomainError);
}

TEST_CASE("censoring calibration") {
  const double lambda = censoring_intensity_for(0.401, 1.5);
  CHECK(lambda > 0.0);
  SynthSpec s;
  s.n = 200000;
  s.censoring_intensity = lambda;
  CHECK(settled_fraction(synthesize_claims(s)) == doctest::Approx(0.401).epsilon(0.01));
  CHECK_THROWS_AS(censoring_intensity_for(1.0, 1.5), DomainError);
  CHECK_THROWS_AS(censoring_intensity_for(0.0, 1.5), DomainError);
}

TEST_CASE("curve endpoints reproduce the baselines") {
  const auto sel = select_top_k(fixture(), 69);
  const double imp = imputation_index(sel.tail, sel.x0);
  const double sur = survival_index(sel.tail, sel.x0);
  for (const auto variant : {BridgeVariant::A, BridgeVariant::B}) {
    TailConfig config;
    config.sigma2_grid = {1e-8, 1e8};
    config.variant = variant;
    const auto curve = tail_curve(sel.tail, sel.x0, config);
    CHECK(curve.imputation == imp);
    CHECK(curve.survival == sur);
    REQUIRE(curve.points[0].xi);
    REQUIRE(curve.points[1].xi);
    CHECK(std::abs(*curve.points[0].xi / imp - 1.0) < 1e-3);
    CHECK(std::abs(*curve.points[1].xi / sur - 1.0) < 1e-3);
    CHECK(*curve.points[0].tail_index == doctest::Approx(1.0 / *curve.points[0].xi));
  }
}

TEST_CASE("curve variants and determinism") {
  const auto sel = select_top_k(fixture(11, 0.1), 69);
  TailConfig config;
  config.sigma2_grid = {0.01, 0.1, 1.0};
  const auto a1 = tail_curve(sel.tail, sel.x0, config);
  const auto a2 = tail_curve(sel.tail, sel.x0, config);
  config.variant = BridgeVariant::B;
  const auto b = tail_curve(sel.tail, sel.x0, config);
  for (std::size_t i = 0; i < 3; ++i) {
    REQUIRE(a1.points[i].xi);
    REQUIRE(b.points[i].xi);
    CHECK(*a1.points[i].xi == *a2.points[i].xi);
    // Soft agreement between the two bridging specifications.
    WARN(std::abs(*b.points[i].xi / *a1.points[i].xi - 1.0) < 0.1);
  }
}

TEST_CASE("tail config validation") {
  TailConfig config;
  config.sigma2_grid = {1.0, 0.5};
  CHECK_THROWS_AS(config.validate(), DomainError);
  config.sigma2_grid = {0.0, 1.0};
  CHECK_THROWS_AS(config.validate(), DomainError);
  config.sigma2_grid = {1.0};
  config.k = 1;
  CHECK_THROWS_AS(config.validate(), DomainError);
  CHECK(parse_variant("B") == BridgeVariant::B);
  CHECK(std::string(to_string(BridgeVariant::A)) == "A");
  CHECK_THROWS_AS(parse_variant("C"), DomainError);
}
