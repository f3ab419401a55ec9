#include "doctest.h"

#include <cmath>

#include "ddid/did_estimators.hpp"
#include "ddid/error.hpp"
#include "support.hpp"

using namespace ddid;
using namespace ddid::testing;

namespace {

// Three-period toy: treated (0, 1, 3), control (0, 0.5, 1.5), onset at t = 2.
PanelDataset toy3() { return toy_panel({0, 1, 3}, {0, 0.5, 1.5}, 2); }

CellTable cells(const PanelDataset& d) { return CellTable(d, basic_comparison(d)); }

PanelDataset transform(const PanelDataset& d, auto&& f) {
  auto obs = d.observations();
  for (auto& o : obs) o.outcome = f(o);
  return PanelDataset::build(std::move(obs), d.mode(), d.design(), d.covariate_names());
}

}  // namespace

TEST_CASE("did_standard examples") {
  const auto d = toy_panel({1, 3}, {0.5, 1.5}, 1);
  CHECK(did_standard(d, 1, 0).value == doctest::Approx(1.0).epsilon(1e-15));
  const auto par = toy_panel({1, 3}, {4, 6}, 1);
  CHECK(std::abs(did_standard(par, 1, 0).value) < 1e-14);
  const auto shifted = transform(d, [](const Observation& o) { return o.outcome + 17.25; });
  CHECK(did_standard(shifted, 1, 0).value == doctest::Approx(1.0));
  CHECK_FALSE(did_standard(d, 1, 0).cells_used.empty());
}

TEST_CASE("did_sequential and did_extended on the three-period toy") {
  const auto d = toy3();
  CHECK(did_standard(d, 2, 1).value == doctest::Approx(1.0));
  CHECK(did_standard(d, 1, 0).value == doctest::Approx(0.5));
  CHECK(did_sequential(d, 2, 1, 0).value == doctest::Approx(0.5));
  CHECK(did_extended(d, 2, 1, 0).value == doctest::Approx(1.25));
  CHECK(did_20(cells(d), 2, 0).value == doctest::Approx(1.5));
  CHECK(did_kdid(d, 2, 0).value == doctest::Approx(did_sequential(d, 2, 1, 0).value).epsilon(1e-14));
  CHECK(did_kdid(d, 1, 0).value == doctest::Approx(did_standard(d, 2, 1).value).epsilon(1e-14));
}

TEST_CASE("did_sequential is zero under linear group trends") {
  const auto d = toy_panel({1, 3, 5, 7}, {0, 0.5, 1, 1.5}, 3);
  CHECK(std::abs(did_sequential(d, 3, 2, 1).value) < 1e-13);
  CHECK(std::abs(did_extended(toy_panel({1, 2, 3}, {5, 6, 7}, 2), 2, 1, 0).value) < 1e-13);
}

TEST_CASE("did_pretrend") {
  CHECK(std::abs(did_pretrend(toy_panel({0, 1, 2, 9}, {3, 4, 5, 6}, 3), 1, 0).value) < 1e-13);
  const auto d = toy_panel({0, 1, 2, 9}, {0, 2, 4, 6}, 3);
  CHECK(did_pretrend(d, 1, 0).value == doctest::Approx(-1.0));
  CHECK(did_pretrend(d, 2, 1).value == doctest::Approx(-1.0));
  CHECK_THROWS_AS(did_pretrend(d, 3, 2), Error);
}

TEST_CASE("m_coefficient") {
  CHECK(m_coefficient(2, 0) == 1.0);
  for (int s = 0; s < 10; ++s) CHECK(m_coefficient(2, s) == doctest::Approx(s + 1.0));
  CHECK(m_coefficient(3, 1) == doctest::Approx(3.0));
  CHECK(m_coefficient(3, 0) == 1.0);
  CHECK(m_coefficient(4, 2) == doctest::Approx(10.0));  // C(5, 3)
  try {
    m_coefficient(1, 0);
    FAIL("expected domain error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::domain);
  }
}

TEST_CASE("difference_operator reductions as coefficient vectors") {
  const auto k1 = difference_operator(1, 0, 5);
  CHECK(k1.coefficients == std::vector<std::pair<int, double>>{{4, -1.0}, {5, 1.0}});
  const auto k2 = difference_operator(2, 0, 5);
  CHECK(k2.coefficients == std::vector<std::pair<int, double>>{{3, 1.0}, {4, -2.0}, {5, 1.0}});
  // Coefficients of any order sum to zero and touch exactly k + 1 periods.
  for (int k = 1; k <= 6; ++k)
    for (int s = 0; s <= 3; ++s) {
      const auto op = difference_operator(k, s, 10);
      double sum = 0.0;
      for (const auto& [p, c] : op.coefficients) sum += c;
      CHECK(std::abs(sum) < 1e-9);
      CHECK(op.coefficients.size() == static_cast<std::size_t>(k + 1));
      CHECK(op.coefficients.front().first == 10 - k);
      CHECK(op.coefficients.back().first == 10 + s);
    }
}

TEST_CASE("did_kdid errors") {
  const auto d = toy3();
  try {
    did_kdid(d, 3, 0);
    FAIL("expected domain error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::domain);
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
  CHECK_THROWS_AS(did_kdid(d, 1, 1), Error);
}

TEST_CASE("did_kdid recovers the planted effect under polynomial confounding") {
  const double tau = 0.37;
  for (int k = 1; k <= 4; ++k) {
    const int onset = k + 1;
    const int periods = onset + 4;
    Rng rng(100 + k);
    std::vector<double> gamma(static_cast<std::size_t>(k));
    for (auto& g : gamma) g = normal(rng);
    std::vector<double> alpha(static_cast<std::size_t>(periods));
    for (auto& a : alpha) a = normal(rng, 3.0);
    const auto d = make_panel(
        rng, 20, periods, onset,
        [&](int g, int t) {
          double conf = 0.0;
          for (int j = 0; j < k; ++j) conf += gamma[static_cast<std::size_t>(j)] * std::pow(t, j);
          return alpha[static_cast<std::size_t>(t)] + g * conf + (g == 1 && t >= onset ? tau : 0.0);
        },
        0.0);
    for (int s = 0; s <= 3; ++s) CHECK(did_kdid(d, k, s).value == doctest::Approx(tau).epsilon(1e-9));
  }
}

TEST_CASE("property: linearity in outcomes and invariance to period shocks") {
  Rng rng(5);
  for (int rep = 0; rep < 30; ++rep) {
    const auto d = random_panel(rng, 16, 5, 3, 0.1);
    const double c = uniform(rng, -3, 3);
    std::vector<double> delta(5);
    for (auto& v : delta) v = normal(rng, 5.0);
    const auto scaled = transform(d, [&](const Observation& o) { return c * o.outcome; });
    const auto shocked = transform(d, [&](const Observation& o) { return o.outcome + delta[o.time - 2000]; });
    const auto checks = [&](auto&& est) {
      const double base = est(d);
      CHECK(est(scaled) == doctest::Approx(c * base).epsilon(1e-9));
      CHECK(est(shocked) == doctest::Approx(base).epsilon(1e-9));
    };
    checks([](const PanelDataset& x) { return did_standard(x, 3, 2).value; });
    checks([](const PanelDataset& x) { return did_sequential(x, 3, 2, 1).value; });
    checks([](const PanelDataset& x) { return did_extended(x, 3, 2, 1).value; });
    checks([](const PanelDataset& x) { return did_pretrend(x, 2, 0).value; });
    checks([](const PanelDataset& x) { return did_kdid(x, 3, 1).value; });
  }
}

TEST_CASE("property: e-DID = 1.5 DID - 0.5 s-DID on arbitrary data") {
  Rng rng(9);
  for (int rep = 0; rep < 50; ++rep) {
    const auto d = rep % 2 ? random_panel(rng, 12, 3, 2, 0.2) : random_rcs(rng, 3, 2);
    const double did = did_standard(d, 2, 1).value;
    const double sdid = did_sequential(d, 2, 1, 0).value;
    const double edid = did_extended(d, 2, 1, 0).value;
    CHECK(sdid == doctest::Approx(did - did_standard(d, 1, 0).value).epsilon(1e-12));
    CHECK(edid == doctest::Approx(did + 0.5 * did_standard(d, 1, 0).value).epsilon(1e-12));
    CHECK(edid == doctest::Approx(1.5 * did - 0.5 * sdid).epsilon(1e-12));
  }
}

TEST_CASE("estimators use period-specific cell counts") {
  // Unbalanced cells: the treated cell at t = 0 holds a single row.
  std::vector<Observation> obs;
  auto add = [&](const std::string& u, std::int64_t t, double y, bool g, bool d) {
    Observation o;
    o.unit = u;
    o.time = t;
    o.outcome = y;
    o.group = g;
    o.treated = d;
    obs.push_back(o);
  };
  add("a", 0, 1, true, false);
  add("b", 1, 2, true, true);
  add("c", 1, 6, true, true);
  add("d", 0, 0, false, false);
  add("e", 1, 1, false, false);
  const auto d = PanelDataset::build(obs, DataMode::repeated_cross_section, Design::basic);
  CHECK(did_standard(d, 1, 0).value == doctest::Approx((4.0 - 1.0) - (1.0 - 0.0)));
  const auto e = did_standard(d, 1, 0);
  double n_treated_post = 0;
  for (const auto& c : e.cells_used)
    if (c.group == 1 && c.period == 1) n_treated_post = c.n;
  CHECK(n_treated_post == 2.0);
}
