#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ddid {

enum class WeightProvenance {
  preset_standard,
  preset_extended,
  preset_sequential,
  estimated_optimal,
  diagonal_fallback,
  user,
};

std::string_view to_string(WeightProvenance p);

// Ordered component estimates entering the quadratic form.
struct MomentVector {
  std::vector<double> estimates;
  std::vector<std::string> labels;

  std::size_t size() const noexcept { return estimates.size(); }
};

struct WeightMatrix {
  Eigen::MatrixXd entries;
  WeightProvenance provenance = WeightProvenance::user;
};

struct GmmResult {
  double point = 0.0;
  std::vector<double> weights;     // W1 / (1'W1), sums to one
  std::optional<double> variance;  // (1'W1)^-1 under estimated-optimal W
  WeightMatrix weight_matrix;
  std::optional<double> j_statistic;  // g' W g at the optimum, optimal W only
  int j_dof = 0;
};

// argmin_tau (tau 1 - m)' W (tau 1 - m) = 1'W m / 1'W 1.
GmmResult gmm_combine(const MomentVector& moments, const WeightMatrix& w);

// Quadratic-form objective at tau.
double gmm_objective(const MomentVector& moments, const Eigen::MatrixXd& w, double tau);

// W = vcov^-1. Throws NearSingularError when vcov is not positive definite or
// its condition number exceeds `max_condition`.
WeightMatrix optimal_weight(const Eigen::MatrixXd& vcov, double max_condition = 1e8);

// Optimal weight with the diagonal fallback applied on near-singular input.
// Appends a note describing any fallback.
WeightMatrix optimal_weight_or_fallback(const Eigen::MatrixXd& vcov, std::vector<std::string>& notes,
                                        double max_condition = 1e8);

// 2x2 presets over (standard DID, sequential DID) that reproduce the
// standard, extended, and sequential estimators.
WeightMatrix preset_standard();
WeightMatrix preset_extended();
WeightMatrix preset_sequential();

// Variance of the linear combination implied by W: a' V a with a = W1/1'W1.
double plugin_variance(const Eigen::MatrixXd& w, const Eigen::MatrixXd& vcov);

// Upper-tail chi-square probability for the J statistic.
double chi_square_sf(double x, int dof);

}  // namespace ddid
