#include "ddid/monte_carlo.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "ddid/did_estimators.hpp"
#include "ddid/error.hpp"
#include "ddid/inference.hpp"
#include "ddid/rng.hpp"

namespace ddid {

namespace {

std::string fmt(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

constexpr std::uint64_t kBootstrapStream = 0xB0075772A9ULL;

}  // namespace

std::string scenario_name(const SimulationConfig& c) {
  switch (c.scenario) {
    case Scenario::extended_parallel_trends: return "extended-parallel-trends";
    case Scenario::trends_in_trends: return "trends-in-trends";
    case Scenario::polynomial: return "polynomial:" + std::to_string(c.poly_order);
  }
  return "unknown";
}

void parse_scenario(std::string_view s, SimulationConfig& c) {
  if (s == "1" || s == "extended" || s == "extended-parallel-trends") {
    c.scenario = Scenario::extended_parallel_trends;
  } else if (s == "2" || s == "trends-in-trends") {
    c.scenario = Scenario::trends_in_trends;
  } else if (s.starts_with("polynomial:")) {
    const auto rest = s.substr(11);
    int k = 0;
    auto r = std::from_chars(rest.data(), rest.data() + rest.size(), k);
    if (r.ec != std::errc() || r.ptr != rest.data() + rest.size() || k < 1)
      fail(ErrorCode::invalid_argument, "bad polynomial scenario '" + std::string(s) + "'");
    c.scenario = Scenario::polynomial;
    c.poly_order = k;
  } else {
    fail(ErrorCode::invalid_argument, "unknown scenario '" + std::string(s) +
                                          "' (expected 1, 2, or polynomial:K)");
  }
}

void validate(const SimulationConfig& c) {
  require(c.n >= 4, ErrorCode::invalid_argument, "n must be >= 4");
  require(c.periods >= 3, ErrorCode::invalid_argument, "at least 3 periods are required");
  require(c.rho >= 0.0 && c.rho < 1.0, ErrorCode::invalid_argument, "rho must lie in [0, 1)");
  require(std::isfinite(c.tau), ErrorCode::invalid_argument, "tau must be finite");
  require(c.reps >= 1, ErrorCode::invalid_argument, "reps must be >= 1");
  require(c.innovation_variance >= 0.0, ErrorCode::invalid_argument, "innovation variance must be >= 0");
  require(c.bootstrap >= 2, ErrorCode::invalid_argument, "bootstrap iterations must be >= 2");
  require(c.ci_level > 0.0 && c.ci_level < 1.0, ErrorCode::invalid_argument, "ci level must lie in (0, 1)");
  require(c.poly_order >= 1, ErrorCode::invalid_argument, "polynomial order must be >= 1");
  for (int k : effective_orders(c))
    require(k >= 1 && k <= c.periods - 1, ErrorCode::invalid_argument,
            "order " + std::to_string(k) + " exceeds the " + std::to_string(c.periods - 1) + " pre-periods");
}

Regime effective_regime(const SimulationConfig& c) {
  if (c.regime) return *c.regime;
  return c.scenario == Scenario::extended_parallel_trends ||
                 (c.scenario == Scenario::polynomial && c.poly_order == 1)
             ? Regime::extended
             : Regime::trends_in_trends;
}

std::vector<int> effective_orders(const SimulationConfig& c) {
  if (!c.orders.empty()) return c.orders;
  const int n_pre = c.periods - 1;
  if (!c.regime && c.scenario == Scenario::polynomial && c.poly_order > 2) {
    std::vector<int> out;
    for (int k = c.poly_order; k <= n_pre; ++k) out.push_back(k);
    if (out.empty()) fail(ErrorCode::invalid_argument, "polynomial degree too high for the panel length");
    return out;
  }
  return default_orders(effective_regime(c), n_pre);
}

PanelDataset generate_panel(const SimulationConfig& c, int replicate) {
  const int t_post = c.periods - 1;
  const double sd = std::sqrt(c.innovation_variance);
  const double sd0 = std::sqrt(c.innovation_variance / (1.0 - c.rho * c.rho));
  std::vector<Observation> obs;
  obs.reserve(static_cast<std::size_t>(c.n) * c.periods);
  for (int i = 0; i < c.n; ++i) {
    const int g = i < c.n / 2 ? 1 : 0;
    rng::CounterStream stream(rng::stream_key(c.seed, {static_cast<std::uint64_t>(replicate),
                                                       static_cast<std::uint64_t>(i)}));
    double eps = sd0 * stream.normal();
    const std::string unit = "u" + std::to_string(i);
    for (int t = 0; t < c.periods; ++t) {
      if (t > 0) eps = c.rho * eps + sd * stream.normal();
      double mean = t + 1.0;
      switch (c.scenario) {
        case Scenario::extended_parallel_trends: mean += 0.05 * g; break;
        case Scenario::trends_in_trends: mean += 0.1 * g * (t + 1); break;
        case Scenario::polynomial: mean += 0.1 * g * std::pow(t + 1.0, c.poly_order - 1); break;
      }
      Observation o;
      o.unit = unit;
      o.time = t;
      o.treated = g == 1 && t == t_post;
      o.outcome = mean + eps + (o.treated ? c.tau : 0.0);
      obs.push_back(std::move(o));
    }
  }
  return PanelDataset::build(std::move(obs), DataMode::panel, Design::basic);
}

const EstimatorSummary& SimulationResult::get(std::string_view name) const {
  for (const auto& e : estimators)
    if (e.estimator == name) return e;
  fail(ErrorCode::invalid_argument, "no estimator named '" + std::string(name) + "'");
}

SimulationResult run_study(const SimulationConfig& c) {
  validate(c);
  const auto combo = effective_orders(c);
  std::vector<int> orders = combo;
  for (int k : {1, 2})
    if (std::find(orders.begin(), orders.end(), k) == orders.end()) orders.push_back(k);
  std::sort(orders.begin(), orders.end());
  auto pos = [&](int k) {
    return static_cast<Eigen::Index>(1 + (std::find(orders.begin(), orders.end(), k) - orders.begin()));
  };
  std::vector<Eigen::Index> combo_idx;
  for (int k : combo) combo_idx.push_back(pos(k));

  const int m = c.reps;
  const std::size_t n_est = std::size(kSimEstimators);
  std::vector<std::vector<double>> est(n_est, std::vector<double>(m)), ses(n_est, std::vector<double>(m));
  std::exception_ptr err;
  std::mutex mu;

  auto one = [&](int r) {
    const auto data = generate_panel(c, r);
    const Comparison comp = basic_comparison(data);
    const int t_post = comp.anchor;
    Battery battery = [&comp, &orders, t_post](const PanelDataset& d, Weights w) {
      const CellTable cells(d, comp, w);
      std::vector<double> v{did_extended_all(cells, t_post).value};
      for (int k : orders) v.push_back(did_kdid(cells, k, 0).value);
      return v;
    };
    const auto point = battery(data, {});
    BootstrapSpec bs;
    bs.iterations = c.bootstrap;
    bs.seed = rng::stream_key(c.seed, {static_cast<std::uint64_t>(r), kBootstrapStream});
    bs.threads = 1;
    const auto boot = bootstrap_vcov(data, battery, bs);

    MomentVector mv;
    Eigen::MatrixXd v(static_cast<Eigen::Index>(combo_idx.size()), static_cast<Eigen::Index>(combo_idx.size()));
    for (std::size_t a = 0; a < combo_idx.size(); ++a) {
      mv.estimates.push_back(point[static_cast<std::size_t>(combo_idx[a])]);
      mv.labels.push_back(component_label(combo[a], 0));
      for (std::size_t b = 0; b < combo_idx.size(); ++b)
        v(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = boot.vcov(combo_idx[a], combo_idx[b]);
    }
    const auto dd = combine_optimal(std::move(mv), v);
    const Eigen::Index i1 = pos(1), i2 = pos(2);
    const double vals[] = {point[static_cast<std::size_t>(i1)], point[0], point[static_cast<std::size_t>(i2)],
                           dd.gmm.point};
    const double sds[] = {std::sqrt(boot.vcov(i1, i1)), std::sqrt(boot.vcov(0, 0)), std::sqrt(boot.vcov(i2, i2)),
                          dd.se};
    for (std::size_t e = 0; e < n_est; ++e) {
      est[e][r] = vals[e];
      ses[e][r] = sds[e];
    }
  };

  const int workers = std::min(resolve_threads(c.threads), m);
  auto run = [&](int w) {
    for (int r = w; r < m; r += workers) {
      {
        std::lock_guard lock(mu);
        if (err) return;
      }
      try {
        one(r);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  if (workers <= 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);

  SimulationResult res;
  res.config = c;
  const double z = normal_quantile(0.5 + c.ci_level / 2.0);
  for (std::size_t e = 0; e < n_est; ++e) {
    EstimatorSummary s;
    s.estimator = std::string(kSimEstimators[e]);
    double sum = 0.0, sq = 0.0, cover = 0.0, se_sum = 0.0;
    for (int r = 0; r < m; ++r) {
      const double d = est[e][r] - c.tau;
      sum += d;
      sq += d * d;
      cover += std::abs(d) <= z * ses[e][r] ? 1.0 : 0.0;
      se_sum += ses[e][r];
    }
    s.bias = sum / m;
    s.abs_bias = std::abs(s.bias);
    s.se = std::sqrt(sq / m);
    s.coverage = cover / m;
    s.mean_se = se_sum / m;
    s.estimates = std::move(est[e]);
    s.std_errors = std::move(ses[e]);
    res.estimators.push_back(std::move(s));
  }
  return res;
}

std::string results_csv(const SimulationResult& r) {
  const auto& c = r.config;
  std::string out = "estimator,n,rho,scenario,abs_bias,se,M,seed,coverage\n";
  for (const auto& e : r.estimators)
    out += e.estimator + "," + std::to_string(c.n) + "," + fmt(c.rho) + "," + scenario_name(c) + "," +
           fmt(e.abs_bias) + "," + fmt(e.se) + "," + std::to_string(c.reps) + "," + std::to_string(c.seed) +
           "," + fmt(e.coverage) + "\n";
  return out;
}

nlohmann::json to_json(const SimulationConfig& c) {
  return {{"n", c.n},
          {"periods", c.periods},
          {"scenario", scenario_name(c)},
          {"rho", c.rho},
          {"tau", c.tau},
          {"reps", c.reps},
          {"seed", c.seed},
          {"innovation_variance", c.innovation_variance},
          {"bootstrap", c.bootstrap},
          {"ci_level", c.ci_level},
          {"regime", std::string(to_string(effective_regime(c)))},
          {"orders", effective_orders(c)}};
}

nlohmann::json results_json(const SimulationResult& r, bool include_replicates) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : r.estimators) {
    nlohmann::json row = {{"estimator", e.estimator},
                          {"n", r.config.n},
                          {"rho", r.config.rho},
                          {"scenario", scenario_name(r.config)},
                          {"abs_bias", e.abs_bias},
                          {"bias", e.bias},
                          {"se", e.se},
                          {"coverage", e.coverage},
                          {"mean_bootstrap_se", e.mean_se},
                          {"M", r.config.reps},
                          {"seed", r.config.seed}};
    if (include_replicates) {
      row["estimates"] = e.estimates;
      row["bootstrap_se"] = e.std_errors;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace ddid
