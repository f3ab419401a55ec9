#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddid/did_estimators.hpp"
#include "ddid/double_did.hpp"
#include "ddid/fe_regression.hpp"
#include "ddid/inference.hpp"
#include "ddid/panel_data.hpp"

namespace ddid {

// Comparison at adoption period t and lead s: treated A_i = t, controls not
// yet treated by t + s, everyone else excluded.
Comparison sa_comparison(const GroupAssignment& groups, int t, int s);

// Distinct adoption periods, ascending.
std::vector<int> adoption_periods(const PanelDataset& data);

// pi_t over `periods`: share of units adopting at t among units adopting in
// the set. Per-unit multiplicities come from the observation weights.
std::vector<double> cohort_shares(const PanelDataset& data, const std::vector<int>& periods,
                                  Weights weights = {});

// K-DID of order k at lead s for the cohort adopting at t.
DidEstimate sa_component(const PanelDataset& data, int t, int s, int k, Weights weights = {});

// Interaction coefficient over {t-1, t} in the sample G_it >= 0.
double sa_regression(const PanelDataset& data, bool use_covariates, int t, RegressionVariant variant,
                     Weights weights = {});

struct SaOptions {
  Regime regime = Regime::extended;
  std::vector<int> orders;   // empty: {1, 2} (extended) or {2} (trends-in-trends)
  int lead = 0;
  std::vector<int> periods;  // period indices; empty = every eligible adoption period
  double level = 0.95;
  bool use_covariates = false;
};

struct SaPeriod {
  int period = 0;
  double pi = 0.0;
  int n_treated = 0;
  CombinedEstimate estimate;
  EstimateReport report;
};

struct SaReport {
  std::vector<int> orders;
  std::vector<SaPeriod> periods;
  std::vector<int> dropped;  // periods removed for lack of clean controls
  std::vector<double> average_components;
  CombinedEstimate average;
  EstimateReport average_report;
  std::vector<std::string> notes;
};

SaReport sa_double_did(const PanelDataset& data, const SaOptions& options, const BootstrapSpec& spec);

struct SaPretrendOptions {
  int depth = 1;
  std::vector<int> periods;  // empty = every adoption period with history
  double level = 0.95;
  bool standardize = true;
};

struct SaPretrendGap {
  int gap = 0;  // j: DID(t-1-j, t-2-j)
  std::vector<int> periods;
  std::vector<double> pi;
  EstimateReport report;
};

struct SaPretrendReport {
  std::vector<SaPretrendGap> gaps;
  std::vector<std::string> notes;
};

SaPretrendReport sa_pretrend(const PanelDataset& data, const SaPretrendOptions& options,
                             const BootstrapSpec& spec);

}  // namespace ddid
