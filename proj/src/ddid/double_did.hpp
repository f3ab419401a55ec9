#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ddid/gmm.hpp"
#include "ddid/inference.hpp"
#include "ddid/panel_data.hpp"

namespace ddid {

// Identifying assumption chosen by the user after assessment.
enum class Regime { extended, trends_in_trends };

std::string_view to_string(Regime r);
Regime parse_regime(std::string_view s);

// K-DID orders combined by default: 1..n_pre under extended parallel trends,
// 2..n_pre under trends-in-trends (the sequential DID when n_pre = 2).
std::vector<int> default_orders(Regime regime, int n_pre);

struct DoubleDidOptions {
  Regime regime = Regime::extended;
  std::vector<int> orders;  // empty = default_orders
  int lead = 0;
  double level = 0.95;
  bool use_covariates = false;  // regression components (orders 1 and 2 only)
};

struct CombinedEstimate {
  MomentVector components;
  Eigen::MatrixXd vcov;
  GmmResult gmm;
  double se = 0.0;
  std::vector<std::string> notes;
};

// Optimal-weight GMM over components with bootstrap covariance `vcov`; the
// diagonal fallback is used when vcov is near-singular.
CombinedEstimate combine_optimal(MomentVector components, const Eigen::MatrixXd& vcov);

std::string component_label(int order, int lead);

// Point estimates of the K-DID components on a comparison.
std::vector<double> kdid_components(const CellTable& cells, const std::vector<int>& orders, int lead);

struct DoubleDidResult {
  CombinedEstimate estimate;
  std::vector<int> orders;
  EstimateReport report;
};

DoubleDidResult double_did(const PanelDataset& data, const DoubleDidOptions& options,
                           const BootstrapSpec& spec);

// Double DID over regression components (beta, beta_s) with covariates.
DoubleDidResult double_did_regression(const PanelDataset& data, const DoubleDidOptions& options,
                                      const BootstrapSpec& spec);

EstimateReport to_report(const std::string& name, const CombinedEstimate& c, double level,
                         const BootstrapResult& boot, int iterations);

}  // namespace ddid
