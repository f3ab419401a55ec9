#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "ddid/gmm.hpp"
#include "ddid/panel_data.hpp"

namespace ddid {

struct BootstrapSpec {
  int iterations = 500;
  std::uint64_t seed = 20240101;
  // 0 = DDID_THREADS environment variable, else 1.
  int threads = 0;
  // Redraws allowed per replicate when a resample leaves a required cell empty.
  int max_redraws = 20;
};

// Evaluates K component estimators on the dataset under per-observation
// resampling weights. Must be safe to call concurrently.
using Battery = std::function<std::vector<double>(const PanelDataset&, Weights)>;

struct BootstrapResult {
  Eigen::MatrixXd vcov;        // K x K, divisor B
  Eigen::MatrixXd replicates;  // B x K
  int redraws = 0;             // degenerate draws that were redrawn
};

int resolve_threads(int requested);

// Cluster block bootstrap: resamples clusters with replacement, replicate b
// drawn from stream (seed, b, attempt).
BootstrapResult bootstrap_vcov(const PanelDataset& data, const Battery& battery,
                               const BootstrapSpec& spec);

// Empirical covariance of replicate rows with divisor B.
Eigen::MatrixXd replicate_covariance(const Eigen::MatrixXd& replicates);

double normal_quantile(double p);
double normal_cdf(double x);
double two_sided_p_value(double point, double se);

struct Baseline {
  double mean = 0.0;
  double sd = 0.0;
};

struct EquivalenceCI {
  double bound = 0.0;  // symmetric interval [-bound, bound]
  bool standardized = false;
  double baseline_mean = 0.0;
  double baseline_sd = 0.0;
  double ci_lower = 0.0;  // the (2 level - 1) normal CI the bound is taken from
  double ci_upper = 0.0;
  double level = 0.95;
};

// Equivalence interval at `level` (0.95 uses the 90% CI): b = max(|b_L|, |b_U|).
// With a baseline, point and se are first divided by the baseline sd.
EquivalenceCI equivalence_ci(double point, double se, std::optional<Baseline> baseline = std::nullopt,
                             double level = 0.95);

// Control-group mean and sample sd at the earliest period.
Baseline control_baseline(const PanelDataset& data, const Comparison& comparison);

struct EstimateReport {
  std::string estimator;
  double point = 0.0;
  double se = 0.0;
  double level = 0.95;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double p_value = 1.0;
  std::vector<double> weights;
  std::vector<std::string> weight_labels;
  std::vector<double> components;
  std::vector<double> component_se;
  std::optional<std::string> weight_provenance;
  std::optional<double> j_statistic;
  std::optional<double> j_p_value;
  std::optional<EquivalenceCI> equivalence;
  int bootstrap_iterations = 0;
  int bootstrap_redraws = 0;
  std::vector<std::string> notes;
};

// Normal-approximation CI and two-sided p-value around point with se.
EstimateReport make_report(std::string estimator, double point, double se, double level);

nlohmann::json to_json(const EquivalenceCI& e);
nlohmann::json to_json(const EstimateReport& r);

enum class PretrendOrder { level = 1, trend = 2 };

struct PretrendOptions {
  PretrendOrder order = PretrendOrder::level;
  double level = 0.95;
  bool standardize = true;
  std::optional<Baseline> baseline;  // override for the control baseline
};

// Pre-trend assessment treating the last pre-period as the target: the
// order-k difference operator at anchor T*-1, with bootstrap SE, p-value,
// and equivalence CI.
EstimateReport pretrend_test(const PanelDataset& data, const PretrendOptions& options,
                             const BootstrapSpec& spec);

}  // namespace ddid
