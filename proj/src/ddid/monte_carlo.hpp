#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "ddid/double_did.hpp"
#include "ddid/panel_data.hpp"

namespace ddid {

enum class Scenario { extended_parallel_trends, trends_in_trends, polynomial };

struct SimulationConfig {
  int n = 1000;   // units, half of them treated
  int periods = 5;  // t = 0..periods-1, the last one is the only post period
  Scenario scenario = Scenario::extended_parallel_trends;
  int poly_order = 3;  // polynomial scenario: confounding of degree poly_order - 1
  double rho = 0.6;
  double tau = 0.2;
  int reps = 1000;
  std::uint64_t seed = 20240101;
  double innovation_variance = 3.0;
  int bootstrap = 200;  // B per replicate, for the double DID weights and CI coverage
  double ci_level = 0.90;
  std::optional<Regime> regime;  // default: extended for scenario 1, trends-in-trends otherwise
  std::vector<int> orders;       // default: orders implied by the regime / polynomial degree
  int threads = 0;
};

std::string scenario_name(const SimulationConfig& c);
// "1", "extended", "extended-parallel-trends", "2", "trends-in-trends", "polynomial:K".
void parse_scenario(std::string_view s, SimulationConfig& c);
void validate(const SimulationConfig& c);

// Effective regime and combined orders for the double DID.
Regime effective_regime(const SimulationConfig& c);
std::vector<int> effective_orders(const SimulationConfig& c);

// Balanced panel for replicate r. Unit i draws from stream (seed, r, i).
PanelDataset generate_panel(const SimulationConfig& c, int replicate);

struct EstimatorSummary {
  std::string estimator;
  double bias = 0.0;      // mean(estimate - tau)
  double abs_bias = 0.0;  // |bias|
  double se = 0.0;        // sqrt(mean((estimate - tau)^2))
  double coverage = 0.0;  // share of CIs at ci_level covering tau
  double mean_se = 0.0;   // average bootstrap SE
  std::vector<double> estimates;
  std::vector<double> std_errors;
};

struct SimulationResult {
  SimulationConfig config;
  std::vector<EstimatorSummary> estimators;

  const EstimatorSummary& get(std::string_view name) const;
};

inline constexpr std::string_view kSimEstimators[] = {"standard-did", "extended-did", "sequential-did",
                                                      "double-did"};

SimulationResult run_study(const SimulationConfig& c);

// Table with columns estimator, n, rho, scenario, abs_bias, se, M, seed, coverage.
std::string results_csv(const SimulationResult& r);
nlohmann::json results_json(const SimulationResult& r, bool include_replicates);
nlohmann::json to_json(const SimulationConfig& c);

}  // namespace ddid
