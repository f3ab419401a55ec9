#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ddid {

enum class DataMode { panel, repeated_cross_section };
enum class Design { basic, staggered };

std::string_view to_string(DataMode m);
std::string_view to_string(Design d);
DataMode parse_data_mode(std::string_view s);
Design parse_design(std::string_view s);

// One long-format row. `group` is only used when the file carries an explicit
// basic-design group column (required for repeated cross-sections, where the
// treatment indicator is zero for every pre-period row).
struct Observation {
  std::string unit;
  std::int64_t time = 0;
  double outcome = 0.0;
  bool treated = false;
  std::string cluster;
  std::vector<double> covariates;
  std::optional<bool> group;

  bool operator==(const Observation&) const = default;
};

// Column-role binding for CSV ingestion.
struct Schema {
  std::string unit = "unit";
  std::string time = "time";
  std::string outcome = "outcome";
  std::string treatment = "treatment";
  std::optional<std::string> cluster;
  std::optional<std::string> group;
  std::vector<std::string> covariates;
};

// Per-observation resampling multiplicities. Empty means every weight is 1.
using Weights = std::span<const double>;

// Validated, immutable long-format dataset. Periods are re-indexed to
// consecutive integers 0..T-1 in label order; units and clusters to 0..n-1
// in order of first appearance.
class PanelDataset {
 public:
  static PanelDataset build(std::vector<Observation> observations, DataMode mode, Design design,
                            std::vector<std::string> covariate_names = {});

  DataMode mode() const noexcept { return mode_; }
  Design design() const noexcept { return design_; }

  std::size_t size() const noexcept { return obs_.size(); }
  const Observation& observation(std::size_t i) const { return obs_[i]; }
  const std::vector<Observation>& observations() const noexcept { return obs_; }

  int unit_of(std::size_t i) const { return unit_id_[i]; }
  int period_of(std::size_t i) const { return period_[i]; }
  int cluster_of(std::size_t i) const { return cluster_id_[i]; }
  double outcome(std::size_t i) const { return obs_[i].outcome; }
  bool treated(std::size_t i) const { return obs_[i].treated; }

  int n_units() const noexcept { return static_cast<int>(unit_labels_.size()); }
  int n_periods() const noexcept { return static_cast<int>(period_labels_.size()); }
  int n_clusters() const noexcept { return static_cast<int>(cluster_labels_.size()); }

  const std::string& unit_label(int u) const { return unit_labels_[u]; }
  const std::string& cluster_label(int c) const { return cluster_labels_[c]; }
  std::int64_t period_label(int t) const { return period_labels_[t]; }
  const std::vector<std::int64_t>& period_labels() const noexcept { return period_labels_; }
  // Period index for an original time label.
  std::optional<int> period_index(std::int64_t label) const;

  const std::vector<std::string>& covariate_names() const noexcept { return covariate_names_; }

  // Basic design: first treated period index T*.
  std::optional<int> onset() const noexcept { return onset_; }
  // First treated period per unit, if any.
  std::optional<int> adoption(int u) const {
    return adoption_[u] < 0 ? std::nullopt : std::optional<int>(adoption_[u]);
  }
  // Basic-design group G_i.
  int basic_group(int u) const { return basic_group_[u]; }

  // Observation indices grouped by unit, each sorted by period.
  const std::vector<std::vector<std::size_t>>& rows_by_unit() const noexcept { return by_unit_; }
  // Observation indices grouped by cluster.
  const std::vector<std::vector<std::size_t>>& rows_by_cluster() const noexcept { return by_cluster_; }

  // Panel mode: every unit observed in every period.
  bool balanced() const noexcept { return balanced_; }
  const std::vector<std::string>& notes() const noexcept { return notes_; }

 private:
  PanelDataset() = default;

  DataMode mode_ = DataMode::panel;
  Design design_ = Design::basic;
  std::vector<Observation> obs_;
  std::vector<std::string> covariate_names_;
  std::vector<int> unit_id_, period_, cluster_id_;
  std::vector<std::string> unit_labels_, cluster_labels_;
  std::vector<std::int64_t> period_labels_;
  std::vector<int> adoption_;
  std::vector<int> basic_group_;
  std::vector<std::vector<std::size_t>> by_unit_, by_cluster_;
  std::optional<int> onset_;
  bool balanced_ = true;
  std::vector<std::string> notes_;
};

PanelDataset load_csv(const std::string& path, const Schema& schema, DataMode mode, Design design);
PanelDataset parse_csv(std::string_view text, const Schema& schema, DataMode mode, Design design);
// Writes the dataset with the schema's column names; reloading with the same
// schema reproduces the observations field by field.
std::string to_csv(const PanelDataset& data, const Schema& schema);

// G_it / G_its group codes.
inline constexpr int kTreatedGroup = 1;
inline constexpr int kControlGroup = 0;
inline constexpr int kExcludedGroup = -1;

struct GroupAssignment {
  Design design = Design::basic;
  std::optional<int> onset;               // T* (basic design)
  std::vector<int> basic_group;           // G_i
  std::vector<std::optional<int>> adoption;  // A_i, nullopt = never

  // G_it: 1 adopts at t, 0 not yet treated, -1 already treated. G_its
  // additionally excludes units adopting in (t, t+s].
  int g_it(int unit, int t) const { return g_its(unit, t, 0); }
  int g_its(int unit, int t, int s) const {
    const auto& a = adoption[unit];
    if (a && *a == t) return kTreatedGroup;
    if (!a || *a > t + s) return kControlGroup;
    return kExcludedGroup;
  }
};

GroupAssignment assign_groups(const PanelDataset& data);

// Per-unit role in a two-group comparison: 1 treated, 0 control, -1 excluded.
// `anchor` is the first post-treatment period (T* or the adoption period t).
struct Comparison {
  std::vector<int> role;
  int anchor = 0;
};

Comparison basic_comparison(const PanelDataset& data);

struct CellStat {
  double mean = 0.0;
  double n = 0.0;
};

// Group-by-period sums and counts for one comparison, built in a single pass.
class CellTable {
 public:
  CellTable(const PanelDataset& data, const Comparison& comparison, Weights weights = {});

  int anchor() const noexcept { return anchor_; }
  int n_periods() const noexcept { return n_periods_; }
  // Throws EmptyCellError when the cell has no (positive-weight) observations.
  CellStat at(int group, int period) const;
  bool has(int group, int period) const;

 private:
  int anchor_ = 0;
  int n_periods_ = 0;
  std::vector<double> sum_[2], count_[2];
};

// Mean outcome for units with `role == group` in `period`.
CellStat cell_mean(const PanelDataset& data, const Comparison& comparison, int group, int period,
                   Weights weights = {});
// Basic-design convenience: G_i == group.
CellStat cell_mean(const PanelDataset& data, int group, int period);

}  // namespace ddid
