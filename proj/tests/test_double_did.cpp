#include "doctest.h"

#include <cmath>

#include "ddid/did_estimators.hpp"
#include "ddid/double_did.hpp"
#include "ddid/error.hpp"
#include "ddid/fe_regression.hpp"
#include "support.hpp"

using namespace ddid;
using namespace ddid::testing;

namespace {

BootstrapSpec boot(int b = 80, std::uint64_t seed = 11) {
  BootstrapSpec s;
  s.iterations = b;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("regime parsing and default orders") {
  CHECK(parse_regime("extended") == Regime::extended);
  CHECK(parse_regime("trends-in-trends") == Regime::trends_in_trends);
  CHECK(parse_regime("tit") == Regime::trends_in_trends);
  CHECK_THROWS_AS(parse_regime("parallel"), Error);
  CHECK(default_orders(Regime::extended, 1) == std::vector<int>{1});
  CHECK(default_orders(Regime::extended, 4) == std::vector<int>{1, 2, 3, 4});
  CHECK(default_orders(Regime::trends_in_trends, 2) == std::vector<int>{2});
  CHECK(default_orders(Regime::trends_in_trends, 4) == std::vector<int>{2, 3, 4});
  CHECK(component_label(1, 0) == "did");
  CHECK(component_label(2, 0) == "sequential-did");
}

TEST_CASE("two-period data reduces to the standard DID") {
  Rng rng(1);
  const auto d = make_panel(rng, 40, 2, 1, [](int g, int t) { return g + t; });
  const auto r = double_did(d, {}, boot());
  CHECK(r.orders == std::vector<int>{1});
  CHECK(r.report.point == doctest::Approx(did_standard(d, 1, 0).value).epsilon(1e-14));
  CHECK(r.report.weights.size() == 1);
  CHECK(r.report.weights[0] == doctest::Approx(1.0));
}

TEST_CASE("three periods, extended regime: basic double DID") {
  Rng rng(2);
  const auto d = make_panel(rng, 200, 3, 2, [](int g, int t) { return 0.5 * g + t + (g == 1 && t == 2 ? 0.3 : 0); });
  const auto r = double_did(d, {}, boot());
  REQUIRE(r.report.components.size() == 2);
  CHECK(r.report.components[0] == doctest::Approx(did_standard(d, 2, 1).value));
  CHECK(r.report.components[1] == doctest::Approx(did_sequential(d, 2, 1, 0).value));
  const auto& w = r.estimate.gmm.weights;
  CHECK(w[0] + w[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.report.point == doctest::Approx(w[0] * r.report.components[0] + w[1] * r.report.components[1]));
  CHECK(r.report.weight_provenance == std::string("estimated-optimal"));
  CHECK(r.report.j_statistic.has_value());
  CHECK(r.report.ci_lower <= r.report.point);
  CHECK(r.report.ci_upper >= r.report.point);
  CHECK(r.report.se >= 0.0);
}

TEST_CASE("trends-in-trends regime returns the sequential DID") {
  Rng rng(3);
  const auto d = random_panel(rng, 60, 3, 2);
  DoubleDidOptions o;
  o.regime = Regime::trends_in_trends;
  const auto r = double_did(d, o, boot());
  CHECK(r.report.point == doctest::Approx(did_sequential(d, 2, 1, 0).value).epsilon(1e-14));
}

TEST_CASE("identical components give that value") {
  Rng rng(8);
  const auto d = make_panel(rng, 40, 3, 2, [](int g, int t) { return g == 1 && t == 2 ? 2.0 : 0.0; }, 0.0);
  const auto r = double_did(d, {}, boot(20));
  CHECK(r.report.components[0] == doctest::Approx(r.report.components[1]));
  CHECK(r.report.point == doctest::Approx(2.0));
}

TEST_CASE("regression double DID without covariates equals the mean-based one") {
  Rng rng(4);
  for (int rep = 0; rep < 5; ++rep) {
    const auto d = rep % 2 ? random_rcs(rng, 3, 2, 5, 12) : random_panel(rng, 40, 3, 2, 0.1);
    DoubleDidOptions o;
    o.orders = {1, 2};
    const auto a = double_did(d, o, boot(60, rep));
    const auto b = double_did_regression(d, o, boot(60, rep));
    CHECK(std::abs(a.report.point - b.report.point) < 1e-10);
    CHECK(std::abs(a.report.se - b.report.se) < 1e-10);
  }
}

TEST_CASE("regression components with covariates orthogonal to the design") {
  Rng rng(5);
  const auto d = make_panel(rng, 50, 3, 2, [](int g, int t) { return g * t; }, 1.0, 0.0, 1);
  const auto comp = basic_comparison(d);
  const auto frame = make_frame(d, comp, {1, 2}, ResponseKind::outcome);
  const std::vector<Term> base{{TermKind::intercept}, {TermKind::group}, {TermKind::post}, {TermKind::group_x_post}};
  const auto design = build_design(frame, base);
  Eigen::VectorXd z(design.x.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
  const Eigen::VectorXd resid = z - design.x * design.x.colPivHouseholderQr().solve(z);
  auto obs = d.observations();
  for (std::size_t r = 0; r < frame.rows.size(); ++r) obs[frame.rows[r]].covariates[0] = resid(static_cast<Eigen::Index>(r));
  const auto orth = PanelDataset::build(obs, d.mode(), d.design(), d.covariate_names());
  CHECK(did_regression(orth, true, RegressionVariant::standard) ==
        doctest::Approx(did_regression(orth, false, RegressionVariant::standard)).epsilon(1e-10));
}

TEST_CASE("double DID regression input checks") {
  Rng rng(6);
  const auto d = random_panel(rng, 30, 4, 3);
  DoubleDidOptions o;
  o.use_covariates = true;
  o.orders = {3};
  CHECK_THROWS_AS(double_did(d, o, boot()), Error);
  o.orders = {};
  o.lead = 1;
  CHECK_THROWS_AS(double_did(d, o, boot()), Error);
  DoubleDidOptions dup;
  dup.orders = {1, 1};
  CHECK_THROWS_AS(double_did(d, dup, boot()), Error);
}

TEST_CASE("generalized double DID with K = 3 and a lead") {
  Rng rng(7);
  const auto d = make_panel(rng, 120, 6, 3, [](int g, int t) { return 0.2 * g * t + (g == 1 && t >= 3 ? 0.5 : 0.0); });
  DoubleDidOptions o;
  o.lead = 2;
  const auto r = double_did(d, o, boot());
  CHECK(r.orders == std::vector<int>{1, 2, 3});
  CHECK(r.report.components[2] == doctest::Approx(did_kdid(d, 3, 2).value));
  CHECK(r.report.weight_labels[1] == component_label(2, 2));
}

TEST_CASE("near-singular covariance falls back to diagonal weights") {
  MomentVector m;
  m.estimates = {1.0, 2.0};
  m.labels = {"a", "b"};
  Eigen::MatrixXd v(2, 2);
  v << 1.0, 1.0, 1.0, 1.0;
  const auto c = combine_optimal(m, v);
  CHECK(c.gmm.weight_matrix.provenance == WeightProvenance::diagonal_fallback);
  CHECK_FALSE(c.notes.empty());
  CHECK(c.gmm.point == doctest::Approx(1.5));
}
