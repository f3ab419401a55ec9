#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ddid/panel_data.hpp"

namespace ddid {

enum class EstimatorKind { standard, did20, extended, sequential, kdid, pretrend };

std::string_view to_string(EstimatorKind k);

struct CellUse {
  int group = 0;
  int period = 0;
  double n = 0.0;
};

struct DidEstimate {
  double value = 0.0;
  EstimatorKind kind = EstimatorKind::standard;
  int order = 0;  // k, for kdid
  int lead = 0;   // s, for kdid
  std::vector<CellUse> cells_used;
};

// Delta_s^k expanded into a linear functional of per-period group means.
// Applied identically to the treated and control groups; the estimate is the
// treated evaluation minus the control evaluation.
struct DifferenceOperatorSpec {
  int order = 1;
  int lead = 0;
  int anchor = 0;  // first post-treatment period
  // (period, coefficient), sorted by period, zero coefficients dropped.
  std::vector<std::pair<int, double>> coefficients;
};

// M^l_s = prod_{j=1}^{l-1} (s + j) / prod_{j=1}^{l-1} j, for l >= 2.
double m_coefficient(int ell, int s);

// Expands the recursion Delta_s^k = Delta_s^{k-1} - M^k_s Delta^{k-1}(pre)
// into coefficients over periods {anchor-k, ..., anchor-1, anchor+s}.
DifferenceOperatorSpec difference_operator(int order, int lead, int anchor);

// Evaluates a linear functional over cell means: sum_p c_p (ybar_1p - ybar_0p).
DidEstimate apply_operator(const CellTable& cells, const DifferenceOperatorSpec& op);

DidEstimate did_standard(const CellTable& cells, int t_post, int t_pre);
DidEstimate did_20(const CellTable& cells, int t_post, int t_pre0);
DidEstimate did_sequential(const CellTable& cells, int t_post, int t_mid, int t_base);
DidEstimate did_extended(const CellTable& cells, int t_post, int t_pre1, int t_pre0);
// Equal-weight average of did_standard(t_post, p) over every pre-period p < anchor.
// On a balanced panel with a single post period this is the two-way fixed
// effects coefficient.
DidEstimate did_extended_all(const CellTable& cells, int t_post);
// Both periods must precede the anchor.
DidEstimate did_pretrend(const CellTable& cells, int t1, int t0);
DidEstimate did_kdid(const CellTable& cells, int order, int lead);

// Dataset conveniences for the basic design (T* from the data).
DidEstimate did_standard(const PanelDataset& data, int t_post, int t_pre);
DidEstimate did_sequential(const PanelDataset& data, int t_post, int t_mid, int t_base);
DidEstimate did_extended(const PanelDataset& data, int t_post, int t_pre1, int t_pre0);
DidEstimate did_pretrend(const PanelDataset& data, int t1, int t0);
DidEstimate did_kdid(const PanelDataset& data, int order, int lead);

}  // namespace ddid
