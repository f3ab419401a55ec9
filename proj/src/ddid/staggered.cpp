#include "ddid/staggered.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "ddid/error.hpp"

namespace ddid {

Comparison sa_comparison(const GroupAssignment& groups, int t, int s) {
  Comparison c;
  c.anchor = t;
  c.role.resize(groups.adoption.size());
  for (std::size_t u = 0; u < groups.adoption.size(); ++u) c.role[u] = groups.g_its(static_cast<int>(u), t, s);
  return c;
}

std::vector<int> adoption_periods(const PanelDataset& data) {
  std::set<int> s;
  for (int u = 0; u < data.n_units(); ++u)
    if (auto a = data.adoption(u)) s.insert(*a);
  return {s.begin(), s.end()};
}

namespace {

double unit_weight(const PanelDataset& data, int u, Weights w) {
  if (w.empty()) return 1.0;
  const auto& rows = data.rows_by_unit()[u];
  return rows.empty() ? 0.0 : w[rows.front()];
}

std::string period_name(const PanelDataset& data, int t) { return std::to_string(data.period_label(t)); }

// Throws unless the comparison has both adopters at t and clean controls.
void check_comparison(const PanelDataset& data, const Comparison& c, int t, int s) {
  int n1 = 0, n0 = 0;
  for (int r : c.role) {
    n1 += r == kTreatedGroup;
    n0 += r == kControlGroup;
  }
  if (n1 == 0) fail(ErrorCode::domain, "no units adopt the treatment at period " + period_name(data, t));
  if (n0 == 0)
    fail(ErrorCode::no_clean_control, "no clean control: no unit is untreated through period " +
                                          (t + s < data.n_periods() ? period_name(data, t + s)
                                                                    : std::to_string(t + s)));
}

int count_role(const Comparison& c, int role) {
  return static_cast<int>(std::count(c.role.begin(), c.role.end(), role));
}

void require_panel(const PanelDataset& data) {
  require(data.mode() == DataMode::panel, ErrorCode::domain,
          "the staggered adoption design requires panel data");
}

}  // namespace

std::vector<double> cohort_shares(const PanelDataset& data, const std::vector<int>& periods, Weights weights) {
  std::map<int, double> mass;
  for (int t : periods) mass[t] = 0.0;
  for (int u = 0; u < data.n_units(); ++u) {
    const auto a = data.adoption(u);
    if (!a) continue;
    auto it = mass.find(*a);
    if (it != mass.end()) it->second += unit_weight(data, u, weights);
  }
  double total = 0.0;
  for (const auto& [t, m] : mass) total += m;
  if (!(total > 0.0)) throw EmptyCellError("treated", periods.empty() ? 0 : periods.front());
  std::vector<double> pi;
  for (int t : periods) pi.push_back(mass[t] / total);
  return pi;
}

DidEstimate sa_component(const PanelDataset& data, int t, int s, int k, Weights weights) {
  require_panel(data);
  const auto groups = assign_groups(data);
  const auto comp = sa_comparison(groups, t, s);
  check_comparison(data, comp, t, s);
  return did_kdid(CellTable(data, comp, weights), k, s);
}

double sa_regression(const PanelDataset& data, bool use_covariates, int t, RegressionVariant variant,
                     Weights weights) {
  require_panel(data);
  const auto comp = sa_comparison(assign_groups(data), t, 0);
  check_comparison(data, comp, t, 0);
  return did_regression(data, comp, use_covariates, variant, weights);
}

SaReport sa_double_did(const PanelDataset& data, const SaOptions& options, const BootstrapSpec& spec) {
  require_panel(data);
  const auto groups = assign_groups(data);
  const int lead = options.lead;
  require(lead >= 0, ErrorCode::invalid_argument, "lead must be >= 0");
  SaReport out;
  out.orders = options.orders;
  if (out.orders.empty())
    out.orders = options.regime == Regime::extended ? std::vector<int>{1, 2} : std::vector<int>{2};
  for (int k : out.orders) {
    require(k >= 1, ErrorCode::invalid_argument, "orders must be >= 1");
    if (options.use_covariates)
      require(k <= 2, ErrorCode::invalid_argument, "covariate-adjusted estimation supports orders 1 and 2 only");
  }
  require(!options.use_covariates || lead == 0, ErrorCode::invalid_argument,
          "covariate-adjusted estimation supports lead 0 only");
  const int k_max = *std::max_element(out.orders.begin(), out.orders.end());
  const bool explicit_periods = !options.periods.empty();
  const auto candidates = explicit_periods ? options.periods : adoption_periods(data);

  std::vector<int> periods;
  std::vector<Comparison> comps;
  for (int t : candidates) {
    require(t >= 0 && t < data.n_periods(), ErrorCode::invalid_argument, "period index out of range");
    if (t < k_max || t + lead >= data.n_periods()) {
      const std::string why = "period " + period_name(data, t) + " needs " + std::to_string(k_max) +
                              " earlier periods and lead " + std::to_string(lead) + " within the panel";
      if (explicit_periods) fail(ErrorCode::domain, why);
      out.notes.push_back("skipped: " + why);
      continue;
    }
    auto comp = sa_comparison(groups, t, lead);
    try {
      check_comparison(data, comp, t, lead);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::no_clean_control) throw;
      out.dropped.push_back(t);
      out.notes.push_back("WARNING dropped period " + period_name(data, t) + ": " + e.what() +
                          "; cohort shares renormalized over the remaining periods");
      continue;
    }
    periods.push_back(t);
    comps.push_back(std::move(comp));
  }
  if (periods.empty())
    fail(ErrorCode::no_clean_control, "no adoption period has both adopters and clean controls");

  const auto orders = out.orders;
  const bool cov = options.use_covariates;
  const std::size_t kk = orders.size(), np = periods.size();
  Battery battery = [&comps, orders, lead, cov, periods, kk, np](const PanelDataset& d, Weights w) {
    std::vector<double> v;
    v.reserve((np + 1) * kk);
    for (std::size_t j = 0; j < np; ++j) {
      if (cov) {
        for (int k : orders)
          v.push_back(did_regression(d, comps[j], true,
                                     k == 1 ? RegressionVariant::standard : RegressionVariant::sequential, w));
      } else {
        const CellTable cells(d, comps[j], w);
        for (int k : orders) v.push_back(did_kdid(cells, k, lead).value);
      }
    }
    const auto pi = cohort_shares(d, periods, w);
    for (std::size_t k = 0; k < kk; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < np; ++j) s += pi[j] * v[j * kk + k];
      v.push_back(s);
    }
    return v;
  };

  const auto point = battery(data, {});
  const auto boot = bootstrap_vcov(data, battery, spec);
  const auto pi = cohort_shares(data, periods);
  std::vector<std::string> labels;
  for (int k : orders) labels.push_back(component_label(k, lead));

  auto block = [&](std::size_t j) {
    MomentVector m;
    m.labels = labels;
    m.estimates.assign(point.begin() + static_cast<std::ptrdiff_t>(j * kk),
                       point.begin() + static_cast<std::ptrdiff_t>((j + 1) * kk));
    const auto o = static_cast<Eigen::Index>(j * kk), n = static_cast<Eigen::Index>(kk);
    return combine_optimal(std::move(m), boot.vcov.block(o, o, n, n));
  };
  for (std::size_t j = 0; j < np; ++j) {
    SaPeriod p;
    p.period = periods[j];
    p.pi = pi[j];
    p.n_treated = count_role(comps[j], kTreatedGroup);
    p.estimate = block(j);
    p.report = to_report("sa-double-did[t=" + period_name(data, periods[j]) + "]", p.estimate, options.level,
                         boot, spec.iterations);
    out.periods.push_back(std::move(p));
  }
  out.average = block(np);
  out.average_components = out.average.components.estimates;
  out.average_report = to_report("sa-double-did", out.average, options.level, boot, spec.iterations);
  for (const auto& n : out.notes) out.average_report.notes.push_back(n);
  return out;
}

SaPretrendReport sa_pretrend(const PanelDataset& data, const SaPretrendOptions& options,
                             const BootstrapSpec& spec) {
  require_panel(data);
  require(options.depth >= 1, ErrorCode::invalid_argument, "depth must be >= 1");
  const auto groups = assign_groups(data);
  const bool explicit_periods = !options.periods.empty();
  const auto candidates = explicit_periods ? options.periods : adoption_periods(data);

  SaPretrendReport out;
  std::map<int, Comparison> comps;
  for (int t : candidates) {
    require(t >= 0 && t < data.n_periods(), ErrorCode::invalid_argument, "period index out of range");
    auto comp = sa_comparison(groups, t, 0);
    try {
      check_comparison(data, comp, t, 0);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::no_clean_control) throw;
      out.notes.push_back("WARNING dropped period " + period_name(data, t) + ": " + e.what());
      continue;
    }
    comps.emplace(t, std::move(comp));
  }

  std::vector<std::vector<int>> eligible(static_cast<std::size_t>(options.depth));
  for (int j = 0; j < options.depth; ++j) {
    for (const auto& [t, c] : comps) {
      if (t - 2 - j >= 0) {
        eligible[j].push_back(t);
      } else if (explicit_periods) {
        fail(ErrorCode::domain, "insufficient history: period " + period_name(data, t) + " has no gap " +
                                    std::to_string(j + 1) + " (needs " + std::to_string(j + 2) +
                                    " earlier periods)");
      }
    }
    if (eligible[j].empty())
      fail(ErrorCode::domain, "insufficient history: no adoption period has " + std::to_string(j + 2) +
                                  " earlier periods for gap " + std::to_string(j + 1));
  }

  const int depth = options.depth;
  Battery battery = [&comps, &eligible, depth](const PanelDataset& d, Weights w) {
    std::map<int, CellTable> cells;
    for (const auto& [t, c] : comps) cells.emplace(t, CellTable(d, c, w));
    std::vector<double> v;
    for (int j = 0; j < depth; ++j) {
      const auto& ts = eligible[j];
      const auto pi = cohort_shares(d, ts, w);
      double s = 0.0;
      for (std::size_t q = 0; q < ts.size(); ++q)
        s += pi[q] * did_pretrend(cells.at(ts[q]), ts[q] - 1 - j, ts[q] - 2 - j).value;
      v.push_back(s);
    }
    return v;
  };
  const auto point = battery(data, {});
  const auto boot = bootstrap_vcov(data, battery, spec);

  std::optional<Baseline> baseline;
  if (options.standardize) baseline = control_baseline(data, comps.begin()->second);
  for (int j = 0; j < depth; ++j) {
    SaPretrendGap g;
    g.gap = j;
    g.periods = eligible[j];
    g.pi = cohort_shares(data, eligible[j]);
    g.report = make_report("sa-pretrend[t-" + std::to_string(j + 1) + ",t-" + std::to_string(j + 2) + "]",
                           point[j], std::sqrt(boot.vcov(j, j)), options.level);
    g.report.bootstrap_iterations = spec.iterations;
    g.report.bootstrap_redraws = boot.redraws;
    g.report.equivalence = equivalence_ci(point[j], g.report.se, baseline, 0.95);
    g.report.notes = out.notes;
    out.gaps.push_back(std::move(g));
  }
  return out;
}

}  // namespace ddid
