#include "doctest.h"

#include <cmath>

#include "ddid/did_estimators.hpp"
#include "ddid/error.hpp"
#include "ddid/monte_carlo.hpp"

using namespace ddid;

namespace {

SimulationConfig small(Scenario s, int reps = 20) {
  SimulationConfig c;
  c.scenario = s;
  c.n = 100;
  c.reps = reps;
  c.bootstrap = 30;
  return c;
}

}  // namespace

TEST_CASE("generate_panel layout and determinism") {
  auto c = small(Scenario::extended_parallel_trends);
  const auto d = generate_panel(c, 3);
  CHECK(d.size() == 500);
  CHECK(d.balanced());
  CHECK(d.onset() == 4);
  int treated_units = 0;
  for (int u = 0; u < d.n_units(); ++u) treated_units += d.basic_group(u);
  CHECK(treated_units == 50);
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(d.treated(i) == (d.basic_group(d.unit_of(i)) == 1 && d.period_of(i) == 4));
  CHECK(generate_panel(c, 3).observations() == d.observations());
  CHECK_FALSE(generate_panel(c, 4).observations() == d.observations());
}

TEST_CASE("noiseless scenario 1: every estimator returns tau") {
  auto c = small(Scenario::extended_parallel_trends, 3);
  c.innovation_variance = 0.0;
  c.rho = 0.0;
  const auto d = generate_panel(c, 0);
  CHECK(did_standard(d, 4, 3).value == doctest::Approx(c.tau).epsilon(1e-12));
  CHECK(did_sequential(d, 4, 3, 2).value == doctest::Approx(c.tau).epsilon(1e-12));
  for (int k = 1; k <= 4; ++k) CHECK(did_kdid(d, k, 0).value == doctest::Approx(c.tau).epsilon(1e-12));
  const auto r = run_study(c);
  for (const auto& e : r.estimators) {
    CHECK(e.abs_bias < 1e-12);
    CHECK(e.se < 1e-12);
  }
}

TEST_CASE("noiseless scenario 2: analytic confounding biases") {
  auto c = small(Scenario::trends_in_trends, 2);
  c.innovation_variance = 0.0;
  const auto d = generate_panel(c, 0);
  CHECK(did_standard(d, 4, 3).value == doctest::Approx(c.tau + 0.1).epsilon(1e-12));
  CHECK(did_sequential(d, 4, 3, 2).value == doctest::Approx(c.tau).epsilon(1e-12));
  const auto r = run_study(c);
  CHECK(r.get("standard-did").bias == doctest::Approx(0.1).epsilon(1e-10));
  CHECK(r.get("extended-did").bias == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(r.get("sequential-did").abs_bias < 1e-12);
  CHECK(r.get("double-did").abs_bias < 1e-12);
  for (const auto& e : r.estimators) CHECK(e.se == doctest::Approx(e.abs_bias).epsilon(1e-10));
}

TEST_CASE("noiseless polynomial scenario: orders at or above the degree are exact") {
  auto c = small(Scenario::polynomial, 2);
  parse_scenario("polynomial:3", c);
  c.innovation_variance = 0.0;
  CHECK(effective_orders(c) == std::vector<int>{3, 4});
  const auto d = generate_panel(c, 0);
  for (int k = 3; k <= 4; ++k)
    for (int s = 0; s <= 0; ++s) CHECK(did_kdid(d, k, s).value == doctest::Approx(c.tau).epsilon(1e-10));
  // Quadratic confounding 0.1 (t+1)^2: one step biases by 0.1 (25 - 16).
  CHECK(did_kdid(d, 1, 0).value - c.tau == doctest::Approx(0.9).epsilon(1e-10));
  // Second differences of (t+1)^2 are 2.
  CHECK(did_kdid(d, 2, 0).value - c.tau == doctest::Approx(0.2).epsilon(1e-10));
  CHECK(run_study(c).get("double-did").abs_bias < 1e-10);
}

TEST_CASE("config validation and scenario parsing") {
  SimulationConfig c;
  CHECK(scenario_name(c) == "extended-parallel-trends");
  parse_scenario("2", c);
  CHECK(c.scenario == Scenario::trends_in_trends);
  CHECK(effective_regime(c) == Regime::trends_in_trends);
  CHECK(effective_orders(c) == std::vector<int>{2, 3, 4});
  parse_scenario("1", c);
  CHECK(effective_orders(c) == std::vector<int>{1, 2, 3, 4});
  CHECK_THROWS_AS(parse_scenario("polynomial:x", c), Error);
  CHECK_THROWS_AS(parse_scenario("3", c), Error);
  c.rho = 1.0;
  CHECK_THROWS_AS(validate(c), Error);
  c.rho = 0.5;
  c.orders = {5};
  CHECK_THROWS_AS(validate(c), Error);
}

TEST_CASE("run_study: metric definitions and permutation invariance") {
  auto c = small(Scenario::extended_parallel_trends, 12);
  const auto r = run_study(c);
  for (const auto& e : r.estimators) {
    REQUIRE(e.estimates.size() == 12);
    double sum = 0.0, sq = 0.0;
    for (double v : e.estimates) {
      sum += v - c.tau;
      sq += (v - c.tau) * (v - c.tau);
    }
    CHECK(e.abs_bias == doctest::Approx(std::abs(sum / 12)).epsilon(1e-12));
    CHECK(e.se == doctest::Approx(std::sqrt(sq / 12)).epsilon(1e-12));
    auto rev = e.estimates;
    std::reverse(rev.begin(), rev.end());
    double s2 = 0.0;
    for (double v : rev) s2 += v - c.tau;
    CHECK(std::abs(s2 / 12) == doctest::Approx(e.abs_bias).epsilon(1e-12));
    CHECK(e.coverage >= 0.0);
    CHECK(e.coverage <= 1.0);
  }
}

TEST_CASE("run_study is identical across worker counts") {
  auto c = small(Scenario::trends_in_trends, 8);
  c.threads = 1;
  const auto a = results_json(run_study(c), true).dump();
  c.threads = 3;
  const auto b = results_json(run_study(c), true).dump();
  CHECK(a == b);
  const auto csv = results_csv(run_study(c));
  CHECK(csv.rfind("estimator,n,rho,scenario,abs_bias,se,M,seed,coverage\n", 0) == 0);
}

TEST_CASE("rho sweep runs") {
  for (double rho : {0.0, 0.2, 0.4, 0.6, 0.8}) {
    auto c = small(Scenario::extended_parallel_trends, 4);
    c.rho = rho;
    CHECK_NOTHROW(run_study(c));
  }
}
