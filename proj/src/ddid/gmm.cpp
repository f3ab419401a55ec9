#include "ddid/gmm.hpp"

#include <cmath>
#include <limits>

#include <boost/math/distributions/chi_squared.hpp>

#include "ddid/error.hpp"

namespace ddid {

std::string_view to_string(WeightProvenance p) {
  switch (p) {
    case WeightProvenance::preset_standard: return "preset-standard";
    case WeightProvenance::preset_extended: return "preset-extended";
    case WeightProvenance::preset_sequential: return "preset-sequential";
    case WeightProvenance::estimated_optimal: return "estimated-optimal";
    case WeightProvenance::diagonal_fallback: return "diagonal-fallback";
    case WeightProvenance::user: return "user";
  }
  return "unknown";
}

namespace {

Eigen::VectorXd to_vector(const MomentVector& m) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(m.size()));
  for (std::size_t i = 0; i < m.size(); ++i) v(static_cast<Eigen::Index>(i)) = m.estimates[i];
  return v;
}

}  // namespace

GmmResult gmm_combine(const MomentVector& moments, const WeightMatrix& w) {
  const auto k = static_cast<Eigen::Index>(moments.size());
  require(k >= 1, ErrorCode::invalid_argument, "moment vector is empty");
  require(w.entries.rows() == k && w.entries.cols() == k, ErrorCode::invalid_argument,
          "weight matrix dimension does not match the moment vector");
  for (double v : moments.estimates)
    require(std::isfinite(v), ErrorCode::invalid_argument, "non-finite moment");
  const double asym = (w.entries - w.entries.transpose()).cwiseAbs().maxCoeff();
  require(asym <= 1e-10 * std::max(1.0, w.entries.cwiseAbs().maxCoeff()),
          ErrorCode::invalid_argument, "weight matrix is not symmetric");

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(k);
  const Eigen::VectorXd w1 = w.entries * ones;
  const double denom = ones.dot(w1);
  if (std::abs(denom) <= 1e-12)
    fail(ErrorCode::degenerate_weight, "degenerate weight matrix: 1'W1 = 0, no unique minimizer");

  const Eigen::VectorXd a = w1 / denom;
  const Eigen::VectorXd m = to_vector(moments);

  GmmResult r;
  r.weight_matrix = w;
  r.point = a.dot(m);
  r.weights.assign(a.data(), a.data() + k);
  if (w.provenance == WeightProvenance::estimated_optimal) {
    r.variance = 1.0 / denom;
    if (k >= 2) {
      const Eigen::VectorXd g = Eigen::VectorXd::Constant(k, r.point) - m;
      r.j_statistic = g.dot(w.entries * g);
      r.j_dof = static_cast<int>(k) - 1;
    }
  }
  return r;
}

double gmm_objective(const MomentVector& moments, const Eigen::MatrixXd& w, double tau) {
  const Eigen::VectorXd g = Eigen::VectorXd::Constant(w.rows(), tau) - to_vector(moments);
  return g.dot(w * g);
}

WeightMatrix optimal_weight(const Eigen::MatrixXd& vcov, double max_condition) {
  require(vcov.rows() == vcov.cols() && vcov.rows() >= 1, ErrorCode::invalid_argument,
          "covariance matrix must be square and nonempty");
  const double scale = std::max(1.0, vcov.cwiseAbs().maxCoeff());
  require((vcov - vcov.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale,
          ErrorCode::invalid_argument, "covariance matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(vcov);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > max_condition)
    throw NearSingularError("covariance matrix is not positive definite or is near-singular "
                            "(smallest eigenvalue " + std::to_string(lo) + ", condition number " +
                                (lo > 0.0 ? std::to_string(hi / lo) : std::string("inf")) + ")",
                            lo);
  // Inverse through the eigendecomposition keeps the result exactly symmetric.
  const Eigen::MatrixXd inv = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                              eig.eigenvectors().transpose();
  WeightMatrix w;
  w.entries = 0.5 * (inv + inv.transpose());
  w.provenance = WeightProvenance::estimated_optimal;
  return w;
}

WeightMatrix optimal_weight_or_fallback(const Eigen::MatrixXd& vcov, std::vector<std::string>& notes,
                                        double max_condition) {
  try {
    return optimal_weight(vcov, max_condition);
  } catch (const NearSingularError& e) {
    WeightMatrix w;
    w.provenance = WeightProvenance::diagonal_fallback;
    const auto k = vcov.rows();
    w.entries = Eigen::MatrixXd::Zero(k, k);
    const Eigen::VectorXd d = vcov.diagonal();
    const double dmax = d.cwiseAbs().maxCoeff();
    const double tiny = std::numeric_limits<double>::min() + 1e-14 * dmax;
    bool any_zero = false;
    for (Eigen::Index i = 0; i < k; ++i) any_zero = any_zero || d(i) <= tiny;
    if (any_zero) {
      // Components with zero sampling variance dominate any finite weighting.
      for (Eigen::Index i = 0; i < k; ++i) w.entries(i, i) = d(i) <= tiny ? 1.0 : 0.0;
      notes.push_back("zero-variance components: weights placed equally on components with "
                      "zero bootstrap variance");
    } else {
      for (Eigen::Index i = 0; i < k; ++i) w.entries(i, i) = 1.0 / d(i);
      notes.push_back(std::string("near-singular covariance; fell back to inverse-variance "
                                  "(diagonal) weights: ") + e.what());
    }
    return w;
  }
}

WeightMatrix preset_standard() {
  WeightMatrix w;
  w.entries = Eigen::Matrix2d{{1.0, 0.0}, {0.0, 0.0}};
  w.provenance = WeightProvenance::preset_standard;
  return w;
}

WeightMatrix preset_extended() {
  WeightMatrix w;
  w.entries = Eigen::Matrix2d{{3.0, 0.0}, {0.0, -1.0}};
  w.provenance = WeightProvenance::preset_extended;
  return w;
}

WeightMatrix preset_sequential() {
  WeightMatrix w;
  w.entries = Eigen::Matrix2d{{0.0, 0.0}, {0.0, 1.0}};
  w.provenance = WeightProvenance::preset_sequential;
  return w;
}

double plugin_variance(const Eigen::MatrixXd& w, const Eigen::MatrixXd& vcov) {
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(w.rows());
  const Eigen::VectorXd a = (w * ones) / ones.dot(w * ones);
  return a.dot(vcov * a);
}

double chi_square_sf(double x, int dof) {
  if (dof <= 0) return 1.0;
  if (x <= 0.0) return 1.0;
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, x));
}

}  // namespace ddid
