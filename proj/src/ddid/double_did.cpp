#include "ddid/double_did.hpp"

#include <algorithm>
#include <cmath>

#include "ddid/did_estimators.hpp"
#include "ddid/error.hpp"
#include "ddid/fe_regression.hpp"

namespace ddid {

std::string_view to_string(Regime r) {
  return r == Regime::extended ? "extended" : "trends-in-trends";
}

Regime parse_regime(std::string_view s) {
  if (s == "extended" || s == "extended-parallel-trends") return Regime::extended;
  if (s == "trends-in-trends" || s == "tit" || s == "parallel-trends-in-trends") return Regime::trends_in_trends;
  fail(ErrorCode::invalid_argument,
       "unknown regime '" + std::string(s) + "' (expected extended or trends-in-trends)");
}

std::vector<int> default_orders(Regime regime, int n_pre) {
  require(n_pre >= 1, ErrorCode::domain, "at least one pre-treatment period is required");
  std::vector<int> out;
  if (regime == Regime::trends_in_trends) {
    if (n_pre < 2)
      fail(ErrorCode::domain, "the trends-in-trends regime needs at least 2 pre-treatment periods");
    for (int k = 2; k <= n_pre; ++k) out.push_back(k);
  } else {
    for (int k = 1; k <= n_pre; ++k) out.push_back(k);
  }
  return out;
}

std::string component_label(int order, int lead) {
  std::string base = order == 1 ? "did" : order == 2 ? "sequential-did" : "kdid" + std::to_string(order);
  return lead == 0 ? base : base + "(s=" + std::to_string(lead) + ")";
}

std::vector<double> kdid_components(const CellTable& cells, const std::vector<int>& orders, int lead) {
  std::vector<double> out;
  out.reserve(orders.size());
  for (int k : orders) out.push_back(did_kdid(cells, k, lead).value);
  return out;
}

CombinedEstimate combine_optimal(MomentVector components, const Eigen::MatrixXd& vcov) {
  CombinedEstimate c;
  c.vcov = vcov;
  const auto w = optimal_weight_or_fallback(vcov, c.notes);
  c.gmm = gmm_combine(components, w);
  c.components = std::move(components);
  c.se = c.gmm.variance ? std::sqrt(std::max(0.0, *c.gmm.variance))
                        : std::sqrt(std::max(0.0, plugin_variance(w.entries, vcov)));
  return c;
}

EstimateReport to_report(const std::string& name, const CombinedEstimate& c, double level,
                         const BootstrapResult& boot, int iterations) {
  auto r = make_report(name, c.gmm.point, c.se, level);
  r.weights = c.gmm.weights;
  r.weight_labels = c.components.labels;
  r.components = c.components.estimates;
  for (Eigen::Index i = 0; i < c.vcov.rows(); ++i) r.component_se.push_back(std::sqrt(std::max(0.0, c.vcov(i, i))));
  r.weight_provenance = std::string(to_string(c.gmm.weight_matrix.provenance));
  if (c.gmm.j_statistic) {
    r.j_statistic = *c.gmm.j_statistic;
    r.j_p_value = chi_square_sf(*c.gmm.j_statistic, c.gmm.j_dof);
  }
  r.bootstrap_iterations = iterations;
  r.bootstrap_redraws = boot.redraws;
  r.notes = c.notes;
  if (boot.redraws > 0)
    r.notes.push_back(std::to_string(boot.redraws) + " degenerate bootstrap draws were redrawn");
  return r;
}

namespace {

void check_orders(const std::vector<int>& orders) {
  require(!orders.empty(), ErrorCode::invalid_argument, "no component orders requested");
  for (std::size_t i = 0; i < orders.size(); ++i) {
    require(orders[i] >= 1, ErrorCode::invalid_argument, "orders must be >= 1");
    for (std::size_t j = 0; j < i; ++j)
      require(orders[i] != orders[j], ErrorCode::invalid_argument, "duplicate order in component list");
  }
}

}  // namespace

DoubleDidResult double_did(const PanelDataset& data, const DoubleDidOptions& options,
                           const BootstrapSpec& spec) {
  if (options.use_covariates) return double_did_regression(data, options, spec);
  const Comparison comp = basic_comparison(data);
  const int n_pre = comp.anchor;
  DoubleDidResult out;
  out.orders = options.orders.empty() ? default_orders(options.regime, n_pre) : options.orders;
  check_orders(out.orders);
  const int lead = options.lead;
  require(lead >= 0, ErrorCode::invalid_argument, "lead must be >= 0");

  const auto orders = out.orders;
  Battery battery = [&comp, orders, lead](const PanelDataset& d, Weights w) {
    return kdid_components(CellTable(d, comp, w), orders, lead);
  };
  MomentVector m;
  m.estimates = battery(data, {});
  for (int k : orders) m.labels.push_back(component_label(k, lead));
  const auto boot = bootstrap_vcov(data, battery, spec);
  out.estimate = combine_optimal(std::move(m), boot.vcov);
  out.report = to_report("double-did", out.estimate, options.level, boot, spec.iterations);
  for (const auto& n : data.notes()) out.report.notes.push_back(n);
  return out;
}

DoubleDidResult double_did_regression(const PanelDataset& data, const DoubleDidOptions& options,
                                      const BootstrapSpec& spec) {
  require(options.lead == 0, ErrorCode::invalid_argument, "covariate-adjusted estimation supports lead 0 only");
  const Comparison comp = basic_comparison(data);
  DoubleDidResult out;
  if (options.orders.empty()) {
    out.orders = options.regime == Regime::extended ? std::vector<int>{1, 2} : std::vector<int>{2};
    if (options.regime == Regime::extended && comp.anchor < 2) out.orders = {1};
  } else {
    out.orders = options.orders;
  }
  check_orders(out.orders);
  for (int k : out.orders)
    require(k == 1 || k == 2, ErrorCode::invalid_argument,
            "covariate-adjusted estimation supports orders 1 and 2 only");
  const auto orders = out.orders;
  const bool cov = options.use_covariates;
  Battery battery = [&comp, orders, cov](const PanelDataset& d, Weights w) {
    std::vector<double> v;
    for (int k : orders)
      v.push_back(did_regression(d, comp, cov,
                                 k == 1 ? RegressionVariant::standard : RegressionVariant::sequential, w));
    return v;
  };
  MomentVector m;
  m.estimates = battery(data, {});
  for (int k : orders) m.labels.push_back(k == 1 ? "did-regression" : "sequential-did-regression");
  const auto boot = bootstrap_vcov(data, battery, spec);
  out.estimate = combine_optimal(std::move(m), boot.vcov);
  out.report = to_report("double-did-regression", out.estimate, options.level, boot, spec.iterations);
  for (const auto& n : data.notes()) out.report.notes.push_back(n);
  return out;
}

}  // namespace ddid
