#include "ddid/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "ddid/did_estimators.hpp"
#include "ddid/error.hpp"
#include "ddid/rng.hpp"

namespace ddid {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DDID_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

Eigen::MatrixXd replicate_covariance(const Eigen::MatrixXd& replicates) {
  const auto b = replicates.rows();
  require(b >= 1, ErrorCode::invalid_argument, "no replicates");
  const Eigen::RowVectorXd mean = replicates.colwise().sum() / static_cast<double>(b);
  const Eigen::MatrixXd centered = replicates.rowwise() - mean;
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(b);
  return 0.5 * (cov + cov.transpose());
}

BootstrapResult bootstrap_vcov(const PanelDataset& data, const Battery& battery,
                               const BootstrapSpec& spec) {
  require(spec.iterations >= 2, ErrorCode::invalid_argument, "bootstrap needs B >= 2 iterations");
  require(spec.max_redraws >= 0, ErrorCode::invalid_argument, "max_redraws must be >= 0");

  const auto full = battery(data, {});
  require(!full.empty(), ErrorCode::invalid_argument, "estimator battery is empty");
  const auto k = static_cast<Eigen::Index>(full.size());
  const int b_total = spec.iterations;
  const int n_clusters = data.n_clusters();
  const std::size_t n_obs = data.size();

  BootstrapResult out;
  out.replicates.resize(b_total, k);
  std::vector<int> redraws(static_cast<std::size_t>(b_total), 0);
  std::vector<char> exhausted(static_cast<std::size_t>(b_total), 0);

  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::atomic<bool> abort{false};

  auto run = [&](int worker, int n_workers) {
    std::vector<double> mult(static_cast<std::size_t>(n_clusters));
    std::vector<double> weights(n_obs);
    for (int b = worker; b < b_total && !abort.load(); b += n_workers) {
      bool done = false;
      for (int attempt = 0; attempt <= spec.max_redraws && !done; ++attempt) {
        rng::CounterStream stream(rng::stream_key(
            spec.seed, {static_cast<std::uint64_t>(b), static_cast<std::uint64_t>(attempt)}));
        std::fill(mult.begin(), mult.end(), 0.0);
        for (int j = 0; j < n_clusters; ++j)
          mult[stream.below(static_cast<std::uint64_t>(n_clusters))] += 1.0;
        for (std::size_t i = 0; i < n_obs; ++i) weights[i] = mult[data.cluster_of(i)];
        try {
          const auto est = battery(data, weights);
          if (static_cast<Eigen::Index>(est.size()) != k)
            fail(ErrorCode::internal, "battery returned a different number of estimates");
          for (Eigen::Index j = 0; j < k; ++j) out.replicates(b, j) = est[static_cast<std::size_t>(j)];
          done = true;
        } catch (const Error& e) {
          if (e.code() == ErrorCode::empty_cell || e.code() == ErrorCode::no_clean_control ||
              e.code() == ErrorCode::rank_deficient) {
            ++redraws[static_cast<std::size_t>(b)];
          } else {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
            abort = true;
            return;
          }
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          abort = true;
          return;
        }
      }
      if (!done) exhausted[static_cast<std::size_t>(b)] = 1;
    }
  };

  const int n_workers = std::min(resolve_threads(spec.threads), b_total);
  if (n_workers <= 1) {
    run(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(run, w, n_workers);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  for (int r : redraws) out.redraws += r;
  const int n_exhausted = static_cast<int>(std::count(exhausted.begin(), exhausted.end(), 1));
  if (n_exhausted > 0 || out.redraws > b_total / 5)
    fail(ErrorCode::unstable_resampling,
         "unstable resampling: " + std::to_string(out.redraws) + " degenerate draws over " +
             std::to_string(b_total) + " replicates (limit 20%); some resamples leave required "
             "cells empty");
  out.vcov = replicate_covariance(out.replicates);
  return out;
}

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double two_sided_p_value(double point, double se) {
  if (se <= 0.0) return point == 0.0 ? 1.0 : 0.0;
  return std::erfc(std::abs(point / se) / std::sqrt(2.0));
}

EquivalenceCI equivalence_ci(double point, double se, std::optional<Baseline> baseline, double level) {
  require(se >= 0.0 && std::isfinite(se), ErrorCode::invalid_argument, "standard error must be >= 0");
  require(level > 0.5 && level < 1.0, ErrorCode::invalid_argument,
          "equivalence level must lie in (0.5, 1)");
  EquivalenceCI e;
  e.level = level;
  double p = point, s = se;
  if (baseline) {
    if (!(baseline->sd > 0.0))
      fail(ErrorCode::domain, "degenerate baseline: control-group standard deviation is zero");
    e.standardized = true;
    e.baseline_mean = baseline->mean;
    e.baseline_sd = baseline->sd;
    p /= baseline->sd;
    s /= baseline->sd;
  }
  const double z = normal_quantile(level);
  e.ci_lower = p - z * s;
  e.ci_upper = p + z * s;
  e.bound = std::max(std::abs(e.ci_lower), std::abs(e.ci_upper));
  return e;
}

Baseline control_baseline(const PanelDataset& data, const Comparison& comparison) {
  double sum = 0.0, sumsq = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.period_of(i) != 0 || comparison.role[data.unit_of(i)] != 0) continue;
    sum += data.outcome(i);
    ++n;
  }
  if (n == 0) throw EmptyCellError("control", 0);
  const double mean = sum / n;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.period_of(i) != 0 || comparison.role[data.unit_of(i)] != 0) continue;
    sumsq += (data.outcome(i) - mean) * (data.outcome(i) - mean);
  }
  return {mean, n > 1 ? std::sqrt(sumsq / (n - 1)) : 0.0};
}

EstimateReport make_report(std::string estimator, double point, double se, double level) {
  require(level > 0.0 && level < 1.0, ErrorCode::invalid_argument, "confidence level must lie in (0, 1)");
  EstimateReport r;
  r.estimator = std::move(estimator);
  r.point = point;
  r.se = std::max(0.0, se);
  r.level = level;
  const double z = normal_quantile(0.5 + level / 2.0);
  r.ci_lower = point - z * r.se;
  r.ci_upper = point + z * r.se;
  r.p_value = two_sided_p_value(point, r.se);
  return r;
}

nlohmann::json to_json(const EquivalenceCI& e) {
  return {{"equiv_bound", e.bound},           {"equiv_lower", -e.bound},
          {"equiv_upper", e.bound},           {"standardized", e.standardized},
          {"baseline_mean", e.baseline_mean}, {"baseline_sd", e.baseline_sd},
          {"ci90_lower", e.ci_lower},         {"ci90_upper", e.ci_upper},
          {"level", e.level}};
}

nlohmann::json to_json(const EstimateReport& r) {
  nlohmann::json j = {{"estimator", r.estimator},
                      {"point", r.point},
                      {"se", r.se},
                      {"level", r.level},
                      {"ci_lower", r.ci_lower},
                      {"ci_upper", r.ci_upper},
                      {"p_value", r.p_value},
                      {"weights", r.weights},
                      {"weight_labels", r.weight_labels},
                      {"components", r.components},
                      {"component_se", r.component_se},
                      {"bootstrap_iterations", r.bootstrap_iterations},
                      {"bootstrap_redraws", r.bootstrap_redraws},
                      {"notes", r.notes}};
  j["weight_provenance"] = r.weight_provenance ? nlohmann::json(*r.weight_provenance) : nlohmann::json();
  j["j_statistic"] = r.j_statistic ? nlohmann::json(*r.j_statistic) : nlohmann::json();
  j["j_p_value"] = r.j_p_value ? nlohmann::json(*r.j_p_value) : nlohmann::json();
  if (r.equivalence) {
    j["equiv_bound"] = r.equivalence->bound;
    j["equivalence"] = to_json(*r.equivalence);
  } else {
    j["equiv_bound"] = nullptr;
  }
  return j;
}

EstimateReport pretrend_test(const PanelDataset& data, const PretrendOptions& options,
                             const BootstrapSpec& spec) {
  const int k = static_cast<int>(options.order);
  const auto onset = data.onset();
  require(onset.has_value(), ErrorCode::domain, "pre-trend test requires a treatment onset");
  if (*onset < k + 1)
    fail(ErrorCode::domain, "pre-trend test of order " + std::to_string(k) + " needs at least " +
                                std::to_string(k + 1) + " pre-treatment periods, found " +
                                std::to_string(*onset));
  Comparison comp = basic_comparison(data);
  comp.anchor = *onset - 1;  // last pre-period acts as the target

  Battery battery = [&comp, k](const PanelDataset& d, Weights w) {
    return std::vector<double>{did_kdid(CellTable(d, comp, w), k, 0).value};
  };
  const double point = battery(data, {})[0];
  const auto boot = bootstrap_vcov(data, battery, spec);
  auto report = make_report(k == 1 ? "pretrend-level" : "pretrend-trend", point,
                            std::sqrt(boot.vcov(0, 0)), options.level);
  report.bootstrap_iterations = spec.iterations;
  report.bootstrap_redraws = boot.redraws;
  std::optional<Baseline> baseline;
  if (options.standardize) baseline = options.baseline ? *options.baseline : control_baseline(data, comp);
  report.equivalence = equivalence_ci(point, report.se, baseline, 0.95);
  if (boot.redraws > 0)
    report.notes.push_back(std::to_string(boot.redraws) + " degenerate bootstrap draws were redrawn");
  for (const auto& n : data.notes()) report.notes.push_back(n);
  return report;
}

}  // namespace ddid
