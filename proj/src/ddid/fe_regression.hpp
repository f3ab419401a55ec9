#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ddid/panel_data.hpp"

namespace ddid {

// Dense design with named columns.
struct DesignMatrix {
  std::vector<std::string> names;
  Eigen::MatrixXd x;
};

struct WlsFit {
  std::map<std::string, double> coef;
  Eigen::VectorXd beta;  // in column order of the design
  Eigen::VectorXd residuals;
  int rank = 0;

  double at(const std::string& name) const;
};

// Weighted least squares by column-pivoted QR. Empty weights mean OLS.
// Throws rank_deficient listing the columns found collinear.
WlsFit wls_solve(const DesignMatrix& design, const Eigen::VectorXd& y, const Eigen::VectorXd& weights = {});

enum class ResponseKind {
  outcome,
  group_lag_mean,   // Y_it minus the own-group mean of Y at t-1
  unit_difference,  // Y_it minus Y_i,t-1 (panel)
};

enum class TermKind {
  intercept,
  group,          // G
  post,           // I = 1{t >= anchor}
  group_x_post,   // G x I, named "D"
  period_dummies,
  linear_trend,   // t
  group_x_trend,  // G x t
  unit_dummies,
  unit_x_trend,
  covariates,
  lead,           // G x 1{t + 1 >= anchor}
};

struct Term {
  TermKind kind;
  int drop = 0;  // reference levels dropped from a categorical block (first levels in order)
};

struct RegressionSpec {
  ResponseKind response = ResponseKind::outcome;
  std::vector<Term> terms;
  std::string estimand = "D";
};

// Rows of one comparison entering a regression, with their response.
struct RegressionFrame {
  const PanelDataset* data = nullptr;
  Comparison comparison;
  std::vector<std::size_t> rows;
  Eigen::VectorXd y;
  Eigen::VectorXd w;  // empty = unweighted
  int excluded = 0;   // rows without a defined transformed response
};

// Selects rows with role >= 0 in `periods` and positive weight, then builds
// the response. Lag means and lagged values use the same weights.
RegressionFrame make_frame(const PanelDataset& data, const Comparison& comparison,
                           const std::vector<int>& periods, ResponseKind response, Weights weights = {});

DesignMatrix build_design(const RegressionFrame& frame, const std::vector<Term>& terms);

WlsFit fit(const RegressionFrame& frame, const RegressionSpec& spec);

// Two-way within estimator for the single regressor D on a balanced,
// unweighted frame. Agrees with the dummy expansion.
double twfe_within(const RegressionFrame& frame);

enum class RegressionVariant { standard, sequential };

// Interaction coefficient over {anchor-1, anchor} with optional covariates;
// the sequential variant uses the group-lag-mean response.
double did_regression(const PanelDataset& data, const Comparison& comparison, bool use_covariates,
                      RegressionVariant variant, Weights weights = {});
double did_regression(const PanelDataset& data, bool use_covariates, RegressionVariant variant,
                      Weights weights = {});

enum class OracleResult {
  interaction = 1,
  twfe_two_period,
  extended_rcs_lambda,
  extended_twfe,
  sequential_transform,
  group_trends,
  unit_trends,
  leads_test,
};

inline constexpr OracleResult kAllOracleResults[] = {
    OracleResult::interaction,          OracleResult::twfe_two_period, OracleResult::extended_rcs_lambda,
    OracleResult::extended_twfe,        OracleResult::sequential_transform, OracleResult::group_trends,
    OracleResult::unit_trends,          OracleResult::leads_test};

std::string_view to_string(OracleResult r);

struct OracleValue {
  double lhs = 0.0;  // regression side
  double rhs = 0.0;  // cell-mean side
};

// Regression-side and cell-mean-side values that the cited equivalence makes
// equal, evaluated around the basic-design onset.
OracleValue equivalence_oracle(const PanelDataset& data, OracleResult which);

// Harmonic cell-size weight on DID(T*, T*-1) in the three-period
// repeated-cross-section regression.
double rcs_lambda(double n11, double n01, double n10, double n00);

}  // namespace ddid
