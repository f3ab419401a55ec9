#include "ddid/fe_regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>

#include "ddid/did_estimators.hpp"
#include "ddid/error.hpp"

namespace ddid {

double WlsFit::at(const std::string& name) const {
  auto it = coef.find(name);
  if (it == coef.end()) fail(ErrorCode::invalid_argument, "no coefficient named '" + name + "'");
  return it->second;
}

WlsFit wls_solve(const DesignMatrix& design, const Eigen::VectorXd& y, const Eigen::VectorXd& weights) {
  const auto n = design.x.rows();
  const auto p = design.x.cols();
  require(y.size() == n, ErrorCode::invalid_argument, "response length does not match the design");
  require(weights.size() == 0 || weights.size() == n, ErrorCode::invalid_argument,
          "weight length does not match the design");
  require(p >= 1, ErrorCode::invalid_argument, "design has no columns");
  if (n < p)
    fail(ErrorCode::rank_deficient, "rank deficient design: " + std::to_string(n) + " rows for " +
                                        std::to_string(p) + " columns");

  Eigen::MatrixXd xw = design.x;
  Eigen::VectorXd yw = y;
  if (weights.size() > 0) {
    const Eigen::VectorXd s = weights.cwiseMax(0.0).cwiseSqrt();
    xw = s.asDiagonal() * xw;
    yw = s.cwiseProduct(yw);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xw);
  qr.setThreshold(1e-10);
  const int rank = static_cast<int>(qr.rank());
  if (rank < p) {
    std::string cols;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index j = rank; j < p; ++j) {
      if (!cols.empty()) cols += ", ";
      cols += design.names[static_cast<std::size_t>(perm(j))];
    }
    fail(ErrorCode::rank_deficient, "rank deficient design (rank " + std::to_string(rank) + " of " +
                                        std::to_string(p) + "); collinear terms: " + cols);
  }
  WlsFit f;
  f.rank = rank;
  f.beta = qr.solve(yw);
  f.residuals = y - design.x * f.beta;
  for (Eigen::Index j = 0; j < p; ++j) f.coef[design.names[static_cast<std::size_t>(j)]] = f.beta(j);
  return f;
}

RegressionFrame make_frame(const PanelDataset& data, const Comparison& comparison,
                           const std::vector<int>& periods, ResponseKind response, Weights weights) {
  RegressionFrame f;
  f.data = &data;
  f.comparison = comparison;
  std::vector<char> in_set(static_cast<std::size_t>(data.n_periods()), 0);
  for (int t : periods) {
    if (t < 0 || t >= data.n_periods())
      fail(ErrorCode::domain, "regression period index " + std::to_string(t) + " is out of range");
    in_set[static_cast<std::size_t>(t)] = 1;
  }
  const bool weighted = !weights.empty();

  std::optional<CellTable> cells;
  if (response == ResponseKind::group_lag_mean) cells.emplace(data, comparison, weights);
  std::vector<std::size_t> prev;
  if (response == ResponseKind::unit_difference) {
    require(data.mode() == DataMode::panel, ErrorCode::domain,
            "unit differences require panel data");
    prev.assign(data.size(), std::numeric_limits<std::size_t>::max());
    for (const auto& rows : data.rows_by_unit())
      for (std::size_t j = 1; j < rows.size(); ++j)
        if (data.period_of(rows[j]) == data.period_of(rows[j - 1]) + 1) prev[rows[j]] = rows[j - 1];
  }

  std::vector<double> y, w;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int role = comparison.role[data.unit_of(i)];
    const int t = data.period_of(i);
    if (role < 0 || !in_set[static_cast<std::size_t>(t)]) continue;
    const double wi = weighted ? weights[i] : 1.0;
    if (wi <= 0.0) continue;
    double v = data.outcome(i);
    if (response == ResponseKind::group_lag_mean) {
      if (t == 0 || !cells->has(role, t - 1)) {
        ++f.excluded;
        continue;
      }
      v -= cells->at(role, t - 1).mean;
    } else if (response == ResponseKind::unit_difference) {
      if (prev[i] == std::numeric_limits<std::size_t>::max()) {
        ++f.excluded;
        continue;
      }
      v -= data.outcome(prev[i]);
    }
    f.rows.push_back(i);
    y.push_back(v);
    w.push_back(wi);
  }
  f.y = Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  if (weighted) f.w = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  return f;
}

DesignMatrix build_design(const RegressionFrame& frame, const std::vector<Term>& terms) {
  const PanelDataset& data = *frame.data;
  const auto n = static_cast<Eigen::Index>(frame.rows.size());
  const int anchor = frame.comparison.anchor;
  std::vector<std::string> names;
  std::vector<Eigen::VectorXd> cols;
  auto add = [&](std::string name, auto value) {
    Eigen::VectorXd c(n);
    for (Eigen::Index r = 0; r < n; ++r) c(r) = value(frame.rows[static_cast<std::size_t>(r)]);
    names.push_back(std::move(name));
    cols.push_back(std::move(c));
  };
  auto g = [&](std::size_t i) { return frame.comparison.role[data.unit_of(i)] == 1 ? 1.0 : 0.0; };
  auto t_of = [&](std::size_t i) { return static_cast<double>(data.period_of(i)); };

  std::set<int> period_levels, unit_levels;
  for (auto i : frame.rows) {
    period_levels.insert(data.period_of(i));
    unit_levels.insert(data.unit_of(i));
  }
  auto dropped = [](const std::set<int>& levels, int drop) {
    std::vector<int> kept(levels.begin(), levels.end());
    kept.erase(kept.begin(), kept.begin() + std::min<std::ptrdiff_t>(drop, static_cast<std::ptrdiff_t>(kept.size())));
    return kept;
  };

  for (const auto& term : terms) {
    switch (term.kind) {
      case TermKind::intercept: add("(intercept)", [](std::size_t) { return 1.0; }); break;
      case TermKind::group: add("G", g); break;
      case TermKind::post:
        add("I", [&](std::size_t i) { return data.period_of(i) >= anchor ? 1.0 : 0.0; });
        break;
      case TermKind::group_x_post:
        add("D", [&](std::size_t i) { return data.period_of(i) >= anchor ? g(i) : 0.0; });
        break;
      case TermKind::period_dummies:
        for (int p : dropped(period_levels, term.drop))
          add("period[" + std::to_string(data.period_label(p)) + "]",
              [&, p](std::size_t i) { return data.period_of(i) == p ? 1.0 : 0.0; });
        break;
      case TermKind::linear_trend: add("t", t_of); break;
      case TermKind::group_x_trend: add("Gxt", [&](std::size_t i) { return g(i) * t_of(i); }); break;
      case TermKind::unit_dummies:
        for (int u : dropped(unit_levels, term.drop))
          add("unit[" + data.unit_label(u) + "]",
              [&, u](std::size_t i) { return data.unit_of(i) == u ? 1.0 : 0.0; });
        break;
      case TermKind::unit_x_trend:
        for (int u : dropped(unit_levels, term.drop))
          add("unit[" + data.unit_label(u) + "]:t",
              [&, u](std::size_t i) { return data.unit_of(i) == u ? t_of(i) : 0.0; });
        break;
      case TermKind::covariates:
        for (std::size_t j = 0; j < data.covariate_names().size(); ++j)
          add("x[" + data.covariate_names()[j] + "]",
              [&, j](std::size_t i) { return data.observation(i).covariates[j]; });
        break;
      case TermKind::lead:
        add("lead", [&](std::size_t i) { return data.period_of(i) + 1 >= anchor ? g(i) : 0.0; });
        break;
    }
  }
  DesignMatrix d;
  d.names = std::move(names);
  d.x.resize(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) d.x.col(static_cast<Eigen::Index>(j)) = cols[j];
  return d;
}

WlsFit fit(const RegressionFrame& frame, const RegressionSpec& spec) {
  if (frame.rows.empty()) fail(ErrorCode::empty_cell, "regression sample is empty");
  return wls_solve(build_design(frame, spec.terms), frame.y, frame.w);
}

double twfe_within(const RegressionFrame& frame) {
  require(frame.w.size() == 0, ErrorCode::invalid_argument, "within path is unweighted");
  const PanelDataset& data = *frame.data;
  std::map<int, int> unit_pos, period_pos;
  for (auto i : frame.rows) {
    unit_pos.emplace(data.unit_of(i), 0);
    period_pos.emplace(data.period_of(i), 0);
  }
  int k = 0;
  for (auto& [u, pos] : unit_pos) pos = k++;
  k = 0;
  for (auto& [p, pos] : period_pos) pos = k++;
  const auto nu = unit_pos.size(), np = period_pos.size();
  if (frame.rows.size() != nu * np)
    fail(ErrorCode::domain, "within transformation needs a balanced frame");
  Eigen::MatrixXd y = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(nu), static_cast<Eigen::Index>(np),
                                                std::numeric_limits<double>::quiet_NaN());
  Eigen::MatrixXd d = y;
  const int anchor = frame.comparison.anchor;
  for (std::size_t r = 0; r < frame.rows.size(); ++r) {
    const auto i = frame.rows[r];
    const auto a = unit_pos[data.unit_of(i)], b = period_pos[data.period_of(i)];
    if (!std::isnan(y(a, b))) fail(ErrorCode::domain, "within transformation needs unique unit-period rows");
    y(a, b) = frame.y(static_cast<Eigen::Index>(r));
    d(a, b) = (frame.comparison.role[data.unit_of(i)] == 1 && data.period_of(i) >= anchor) ? 1.0 : 0.0;
  }
  auto demean = [](const Eigen::MatrixXd& m) -> Eigen::MatrixXd {
    const Eigen::VectorXd rows = m.rowwise().mean();
    const Eigen::RowVectorXd cols = m.colwise().mean();
    Eigen::MatrixXd out = m.colwise() - rows;
    out.rowwise() -= cols;
    return out.array() + m.mean();
  };
  const Eigen::MatrixXd dt = demean(d), yt = demean(y);
  const double den = dt.cwiseProduct(dt).sum();
  if (den <= 1e-12) fail(ErrorCode::rank_deficient, "treatment is collinear with the fixed effects");
  return dt.cwiseProduct(yt).sum() / den;
}

namespace {

// Covariate columns already in the span of the earlier columns carry no
// information about D; drop them instead of failing.
void drop_spanned_covariates(DesignMatrix& design) {
  std::vector<Eigen::Index> keep;
  Eigen::Index first_cov = 0;
  while (first_cov < design.x.cols() && design.names[static_cast<std::size_t>(first_cov)].rfind("x[", 0) != 0)
    ++first_cov;
  for (Eigen::Index j = 0; j < first_cov; ++j) keep.push_back(j);
  for (Eigen::Index j = first_cov; j < design.x.cols(); ++j) {
    Eigen::MatrixXd trial(design.x.rows(), static_cast<Eigen::Index>(keep.size()) + 1);
    for (std::size_t c = 0; c < keep.size(); ++c) trial.col(static_cast<Eigen::Index>(c)) = design.x.col(keep[c]);
    trial.col(trial.cols() - 1) = design.x.col(j);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(trial);
    qr.setThreshold(1e-10);
    if (qr.rank() == trial.cols()) keep.push_back(j);
  }
  if (static_cast<Eigen::Index>(keep.size()) == design.x.cols()) return;
  DesignMatrix out;
  out.x.resize(design.x.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    out.x.col(static_cast<Eigen::Index>(c)) = design.x.col(keep[c]);
    out.names.push_back(design.names[static_cast<std::size_t>(keep[c])]);
  }
  design = std::move(out);
}

}  // namespace

double did_regression(const PanelDataset& data, const Comparison& comparison, bool use_covariates,
                      RegressionVariant variant, Weights weights) {
  const int a = comparison.anchor;
  const int need = variant == RegressionVariant::standard ? 1 : 2;
  if (a < need)
    fail(ErrorCode::domain, std::string(variant == RegressionVariant::standard ? "standard" : "sequential") +
                                " DID regression needs " + std::to_string(need) +
                                " pre-treatment period(s)");
  RegressionSpec spec;
  spec.response = variant == RegressionVariant::standard ? ResponseKind::outcome : ResponseKind::group_lag_mean;
  spec.terms = {{TermKind::intercept}, {TermKind::group}, {TermKind::post}, {TermKind::group_x_post}};
  if (use_covariates && !data.covariate_names().empty()) spec.terms.push_back({TermKind::covariates});
  const auto frame = make_frame(data, comparison, {a - 1, a}, spec.response, weights);
  if (spec.terms.back().kind != TermKind::covariates) return fit(frame, spec).at("D");
  if (frame.rows.empty()) fail(ErrorCode::empty_cell, "regression sample is empty");
  auto design = build_design(frame, spec.terms);
  drop_spanned_covariates(design);
  return wls_solve(design, frame.y, frame.w).at("D");
}

double did_regression(const PanelDataset& data, bool use_covariates, RegressionVariant variant,
                      Weights weights) {
  return did_regression(data, basic_comparison(data), use_covariates, variant, weights);
}

std::string_view to_string(OracleResult r) {
  switch (r) {
    case OracleResult::interaction: return "standard-interaction";
    case OracleResult::twfe_two_period: return "standard-twfe";
    case OracleResult::extended_rcs_lambda: return "extended-rcs-lambda";
    case OracleResult::extended_twfe: return "extended-twfe";
    case OracleResult::sequential_transform: return "sequential-transformed-outcome";
    case OracleResult::group_trends: return "sequential-group-trends";
    case OracleResult::unit_trends: return "sequential-unit-trends";
    case OracleResult::leads_test: return "leads-test";
  }
  return "unknown";
}

double rcs_lambda(double n11, double n01, double n10, double n00) {
  const double a = n11 * n01 * (n10 + n00);
  const double b = n10 * n00 * (n11 + n01);
  return a / (a + b);
}

namespace {

void require_balanced(const PanelDataset& data, const Comparison& comp, const std::vector<int>& periods,
                      OracleResult which) {
  const std::string name(to_string(which));
  if (data.mode() != DataMode::panel) fail(ErrorCode::domain, "result '" + name + "' requires panel data");
  for (int u = 0; u < data.n_units(); ++u) {
    if (comp.role[u] < 0) continue;
    int hits = 0;
    for (auto i : data.rows_by_unit()[u])
      hits += std::count(periods.begin(), periods.end(), data.period_of(i)) > 0;
    if (hits != static_cast<int>(periods.size()))
      fail(ErrorCode::domain, "result '" + name + "' requires a balanced panel; unit '" +
                                  data.unit_label(u) + "' is missing periods");
  }
}

}  // namespace

OracleValue equivalence_oracle(const PanelDataset& data, OracleResult which) {
  const Comparison comp = basic_comparison(data);
  const int a = comp.anchor;
  const int need = (which == OracleResult::interaction || which == OracleResult::twfe_two_period) ? 1 : 2;
  if (a < need)
    fail(ErrorCode::domain, "result '" + std::string(to_string(which)) + "' needs " +
                                std::to_string(need) + " pre-treatment period(s)");
  const CellTable cells(data, comp);
  const std::vector<int> two{a - 1, a}, three{a - 2, a - 1, a}, pre{a - 2, a - 1};
  RegressionSpec spec;
  std::vector<int> periods;
  OracleValue v;

  switch (which) {
    case OracleResult::interaction:
      periods = two;
      spec.terms = {{TermKind::intercept}, {TermKind::group}, {TermKind::post}, {TermKind::group_x_post}};
      v.rhs = did_standard(cells, a, a - 1).value;
      break;
    case OracleResult::twfe_two_period:
      periods = two;
      require_balanced(data, comp, periods, which);
      spec.terms = {{TermKind::unit_dummies}, {TermKind::period_dummies, 1}, {TermKind::group_x_post}};
      v.rhs = did_standard(cells, a, a - 1).value;
      break;
    case OracleResult::extended_rcs_lambda: {
      periods = three;
      spec.terms = {{TermKind::group}, {TermKind::period_dummies}, {TermKind::group_x_post}};
      const double lam = rcs_lambda(cells.at(1, a - 1).n, cells.at(0, a - 1).n, cells.at(1, a - 2).n,
                                    cells.at(0, a - 2).n);
      v.rhs = lam * did_standard(cells, a, a - 1).value + (1.0 - lam) * did_standard(cells, a, a - 2).value;
      break;
    }
    case OracleResult::extended_twfe:
      periods = three;
      require_balanced(data, comp, periods, which);
      spec.terms = {{TermKind::unit_dummies}, {TermKind::period_dummies, 1}, {TermKind::group_x_post}};
      v.rhs = did_extended(cells, a, a - 1, a - 2).value;
      break;
    case OracleResult::sequential_transform:
      periods = two;
      if (data.mode() == DataMode::panel) {
        require_balanced(data, comp, three, which);
        spec.response = ResponseKind::unit_difference;
        spec.terms = {{TermKind::unit_dummies}, {TermKind::period_dummies, 1}, {TermKind::group_x_post}};
      } else {
        spec.response = ResponseKind::group_lag_mean;
        spec.terms = {{TermKind::intercept}, {TermKind::group}, {TermKind::post}, {TermKind::group_x_post}};
      }
      v.rhs = did_sequential(cells, a, a - 1, a - 2).value;
      break;
    case OracleResult::group_trends:
      periods = three;
      spec.terms = {{TermKind::group}, {TermKind::group_x_trend}, {TermKind::period_dummies}, {TermKind::group_x_post}};
      v.rhs = did_sequential(cells, a, a - 1, a - 2).value;
      break;
    case OracleResult::unit_trends:
      periods = three;
      require_balanced(data, comp, periods, which);
      spec.terms = {{TermKind::unit_dummies}, {TermKind::unit_x_trend}, {TermKind::period_dummies, 2},
                    {TermKind::group_x_post}};
      v.rhs = did_sequential(cells, a, a - 1, a - 2).value;
      break;
    case OracleResult::leads_test:
      periods = pre;
      spec.estimand = "lead";
      if (data.mode() == DataMode::panel) {
        require_balanced(data, comp, periods, which);
        spec.terms = {{TermKind::unit_dummies}, {TermKind::period_dummies, 1}, {TermKind::lead}};
      } else {
        spec.terms = {{TermKind::group}, {TermKind::period_dummies}, {TermKind::lead}};
      }
      v.rhs = did_pretrend(cells, a - 1, a - 2).value;
      break;
  }
  const auto frame = make_frame(data, comp, periods, spec.response);
  v.lhs = fit(frame, spec).at(spec.estimand);
  return v;
}

}  // namespace ddid
