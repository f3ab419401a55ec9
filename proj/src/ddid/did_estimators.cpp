#include "ddid/did_estimators.hpp"

#include <cmath>
#include <map>

#include "ddid/error.hpp"

namespace ddid {

std::string_view to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::standard: return "standard";
    case EstimatorKind::did20: return "did20";
    case EstimatorKind::extended: return "extended";
    case EstimatorKind::sequential: return "sequential";
    case EstimatorKind::kdid: return "kdid";
    case EstimatorKind::pretrend: return "pretrend";
  }
  return "unknown";
}

namespace {

void check_period(const CellTable& cells, int t) {
  if (t < 0 || t >= cells.n_periods())
    fail(ErrorCode::domain, "period index " + std::to_string(t) + " outside [0, " +
                                std::to_string(cells.n_periods() - 1) + "]");
}

struct Cells4 {
  CellStat t1, t0, c1, c0;  // treated post/pre, control post/pre
};

Cells4 fetch(const CellTable& cells, int post, int pre) {
  check_period(cells, post);
  check_period(cells, pre);
  return {cells.at(1, post), cells.at(1, pre), cells.at(0, post), cells.at(0, pre)};
}

void append_cells(std::vector<CellUse>& used, const CellTable& cells, int period) {
  for (int g : {1, 0}) used.push_back({g, period, cells.at(g, period).n});
}

using Functional = std::map<int, double>;

void axpy(Functional& out, double a, const Functional& x) {
  for (const auto& [p, c] : x) out[p] += a * c;
}

// Delta^j applied at period anchor - m (backward differences over pre-periods).
Functional backward_difference(int j, int m, int anchor) {
  if (j == 1) return {{anchor - m, 1.0}, {anchor - m - 1, -1.0}};
  Functional out = backward_difference(j - 1, m, anchor);
  axpy(out, -1.0, backward_difference(j - 1, m + 1, anchor));
  return out;
}

}  // namespace

double m_coefficient(int ell, int s) {
  require(ell >= 2, ErrorCode::domain, "M^l_s requires l >= 2, got l = " + std::to_string(ell));
  require(s >= 0, ErrorCode::domain, "M^l_s requires s >= 0");
  double r = 1.0;
  for (int j = 1; j <= ell - 1; ++j) r = r * (s + j) / j;
  return r;
}

DifferenceOperatorSpec difference_operator(int order, int lead, int anchor) {
  require(order >= 1, ErrorCode::domain, "difference order must be >= 1");
  require(lead >= 0, ErrorCode::domain, "lead must be >= 0");
  if (order > anchor)
    fail(ErrorCode::domain, "order k = " + std::to_string(order) + " exceeds the " +
                                std::to_string(anchor) + " available pre-treatment periods");
  Functional op{{anchor + lead, 1.0}, {anchor - 1, -1.0}};
  for (int k = 2; k <= order; ++k)
    axpy(op, -m_coefficient(k, lead), backward_difference(k - 1, 1, anchor));

  DifferenceOperatorSpec spec;
  spec.order = order;
  spec.lead = lead;
  spec.anchor = anchor;
  for (const auto& [p, c] : op)
    if (c != 0.0) spec.coefficients.emplace_back(p, c);
  return spec;
}

DidEstimate apply_operator(const CellTable& cells, const DifferenceOperatorSpec& op) {
  DidEstimate est;
  est.kind = EstimatorKind::kdid;
  est.order = op.order;
  est.lead = op.lead;
  double v = 0.0;
  for (const auto& [p, c] : op.coefficients) {
    check_period(cells, p);
    v += c * (cells.at(1, p).mean - cells.at(0, p).mean);
    append_cells(est.cells_used, cells, p);
  }
  est.value = v;
  return est;
}

DidEstimate did_standard(const CellTable& cells, int t_post, int t_pre) {
  const auto c = fetch(cells, t_post, t_pre);
  DidEstimate est;
  est.kind = EstimatorKind::standard;
  est.value = (c.t1.mean - c.t0.mean) - (c.c1.mean - c.c0.mean);
  est.cells_used = {{1, t_post, c.t1.n}, {1, t_pre, c.t0.n}, {0, t_post, c.c1.n}, {0, t_pre, c.c0.n}};
  return est;
}

DidEstimate did_20(const CellTable& cells, int t_post, int t_pre0) {
  auto est = did_standard(cells, t_post, t_pre0);
  est.kind = EstimatorKind::did20;
  return est;
}

DidEstimate did_sequential(const CellTable& cells, int t_post, int t_mid, int t_base) {
  require(t_post != t_mid && t_mid != t_base && t_post != t_base, ErrorCode::domain,
          "sequential DID needs three distinct periods");
  const auto a = did_standard(cells, t_post, t_mid);
  const auto b = did_standard(cells, t_mid, t_base);
  DidEstimate est;
  est.kind = EstimatorKind::sequential;
  est.value = a.value - b.value;
  est.cells_used = a.cells_used;
  for (const auto& u : b.cells_used)
    if (u.period == t_base) est.cells_used.push_back(u);
  return est;
}

DidEstimate did_extended(const CellTable& cells, int t_post, int t_pre1, int t_pre0) {
  require(t_post != t_pre1 && t_pre1 != t_pre0 && t_post != t_pre0, ErrorCode::domain,
          "extended DID needs three distinct periods");
  const auto a = did_standard(cells, t_post, t_pre1);
  const auto b = did_standard(cells, t_post, t_pre0);
  DidEstimate est;
  est.kind = EstimatorKind::extended;
  est.value = 0.5 * a.value + 0.5 * b.value;
  est.cells_used = a.cells_used;
  for (const auto& u : b.cells_used)
    if (u.period == t_pre0) est.cells_used.push_back(u);
  return est;
}

DidEstimate did_extended_all(const CellTable& cells, int t_post) {
  const int n_pre = cells.anchor();
  require(n_pre >= 1, ErrorCode::domain, "extended DID needs at least one pre-treatment period");
  DidEstimate est;
  est.kind = EstimatorKind::extended;
  double v = 0.0;
  for (int p = 0; p < n_pre; ++p) {
    const auto d = did_standard(cells, t_post, p);
    v += d.value;
    est.cells_used.push_back(d.cells_used[1]);
    est.cells_used.push_back(d.cells_used[3]);
  }
  append_cells(est.cells_used, cells, t_post);
  est.value = v / n_pre;
  return est;
}

DidEstimate did_pretrend(const CellTable& cells, int t1, int t0) {
  if (t1 >= cells.anchor() || t0 >= cells.anchor())
    fail(ErrorCode::domain, "pre-trend DID periods must precede the treatment onset (period " +
                                std::to_string(cells.anchor()) + ")");
  auto est = did_standard(cells, t1, t0);
  est.kind = EstimatorKind::pretrend;
  return est;
}

DidEstimate did_kdid(const CellTable& cells, int order, int lead) {
  if (cells.anchor() + lead >= cells.n_periods())
    fail(ErrorCode::domain, "target period T*+s = " + std::to_string(cells.anchor() + lead) +
                                " is beyond the last period " +
                                std::to_string(cells.n_periods() - 1));
  return apply_operator(cells, difference_operator(order, lead, cells.anchor()));
}

DidEstimate did_standard(const PanelDataset& data, int t_post, int t_pre) {
  return did_standard(CellTable(data, basic_comparison(data)), t_post, t_pre);
}
DidEstimate did_sequential(const PanelDataset& data, int t_post, int t_mid, int t_base) {
  return did_sequential(CellTable(data, basic_comparison(data)), t_post, t_mid, t_base);
}
DidEstimate did_extended(const PanelDataset& data, int t_post, int t_pre1, int t_pre0) {
  return did_extended(CellTable(data, basic_comparison(data)), t_post, t_pre1, t_pre0);
}
DidEstimate did_pretrend(const PanelDataset& data, int t1, int t0) {
  return did_pretrend(CellTable(data, basic_comparison(data)), t1, t0);
}
DidEstimate did_kdid(const PanelDataset& data, int order, int lead) {
  return did_kdid(CellTable(data, basic_comparison(data)), order, lead);
}

}  // namespace ddid
