#include "ddid/panel_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "ddid/error.hpp"

namespace ddid {

std::string_view to_string(DataMode m) {
  return m == DataMode::panel ? "panel" : "repeated-cross-section";
}

std::string_view to_string(Design d) { return d == Design::basic ? "basic" : "sa"; }

DataMode parse_data_mode(std::string_view s) {
  if (s == "panel") return DataMode::panel;
  if (s == "rcs" || s == "repeated-cross-section") return DataMode::repeated_cross_section;
  fail(ErrorCode::invalid_argument, "unknown data mode '" + std::string(s) + "'");
}

Design parse_design(std::string_view s) {
  if (s == "basic") return Design::basic;
  if (s == "sa" || s == "staggered") return Design::staggered;
  fail(ErrorCode::invalid_argument, "unknown design '" + std::string(s) + "'");
}

namespace {

template <class Key>
int intern(std::unordered_map<Key, int>& index, std::vector<Key>& labels, const Key& key) {
  auto [it, inserted] = index.try_emplace(key, static_cast<int>(labels.size()));
  if (inserted) labels.push_back(key);
  return it->second;
}

}  // namespace

PanelDataset PanelDataset::build(std::vector<Observation> observations, DataMode mode,
                                 Design design, std::vector<std::string> covariate_names) {
  require(!observations.empty(), ErrorCode::validation, "dataset has no observations");
  if (design == Design::staggered && mode == DataMode::repeated_cross_section)
    fail(ErrorCode::validation,
         "staggered design requires panel data: adoption times are undefined when units "
         "are not followed over time");

  PanelDataset d;
  d.mode_ = mode;
  d.design_ = design;
  d.covariate_names_ = std::move(covariate_names);
  d.obs_ = std::move(observations);

  const std::size_t n = d.obs_.size();
  std::set<std::int64_t> times;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& o = d.obs_[i];
    if (!std::isfinite(o.outcome))
      fail(ErrorCode::validation, "non-finite outcome for unit '" + o.unit + "' at time " +
                                      std::to_string(o.time));
    if (o.covariates.size() != d.covariate_names_.size())
      fail(ErrorCode::validation, "covariate count mismatch for unit '" + o.unit + "'");
    for (double x : o.covariates)
      if (!std::isfinite(x))
        fail(ErrorCode::validation, "non-finite covariate for unit '" + o.unit + "'");
    times.insert(o.time);
  }
  d.period_labels_.assign(times.begin(), times.end());
  std::unordered_map<std::int64_t, int> period_index;
  for (int t = 0; t < static_cast<int>(d.period_labels_.size()); ++t)
    period_index[d.period_labels_[t]] = t;

  std::unordered_map<std::string, int> unit_index, cluster_index;
  d.unit_id_.resize(n);
  d.period_.resize(n);
  d.cluster_id_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& o = d.obs_[i];
    if (o.cluster.empty()) o.cluster = o.unit;
    d.unit_id_[i] = intern(unit_index, d.unit_labels_, o.unit);
    d.cluster_id_[i] = intern(cluster_index, d.cluster_labels_, o.cluster);
    d.period_[i] = period_index.at(o.time);
  }

  const int n_units = d.n_units();
  const int n_periods = d.n_periods();
  d.by_unit_.assign(n_units, {});
  d.by_cluster_.assign(d.n_clusters(), {});
  for (std::size_t i = 0; i < n; ++i) {
    d.by_unit_[d.unit_id_[i]].push_back(i);
    d.by_cluster_[d.cluster_id_[i]].push_back(i);
  }
  for (auto& rows : d.by_unit_)
    std::stable_sort(rows.begin(), rows.end(),
                     [&](std::size_t a, std::size_t b) { return d.period_[a] < d.period_[b]; });

  if (mode == DataMode::panel) {
    for (int u = 0; u < n_units; ++u) {
      const auto& rows = d.by_unit_[u];
      for (std::size_t j = 1; j < rows.size(); ++j)
        if (d.period_[rows[j]] == d.period_[rows[j - 1]])
          fail(ErrorCode::validation, "duplicate (unit, time) key: unit '" + d.unit_labels_[u] +
                                          "', time " + std::to_string(d.obs_[rows[j]].time));
      // Units sharing a cluster label must be nested within it.
      for (std::size_t r : rows)
        if (d.cluster_id_[r] != d.cluster_id_[rows.front()])
          fail(ErrorCode::validation,
               "unit '" + d.unit_labels_[u] + "' appears in more than one cluster");
      if (static_cast<int>(rows.size()) != n_periods) d.balanced_ = false;
    }
    if (!d.balanced_)
      d.notes_.push_back("unbalanced panel: some (unit, time) cells are missing");
  } else {
    d.balanced_ = false;
  }

  // Adoption times and the absorbing-state invariant.
  d.adoption_.assign(n_units, -1);
  for (int u = 0; u < n_units; ++u) {
    bool seen = false;
    for (std::size_t r : d.by_unit_[u]) {
      if (d.obs_[r].treated) {
        if (!seen) d.adoption_[u] = d.period_[r];
        seen = true;
      } else if (seen && mode == DataMode::panel) {
        fail(ErrorCode::validation, "treatment reversal for unit '" + d.unit_labels_[u] +
                                        "' at time " + std::to_string(d.obs_[r].time) +
                                        ": treatment must be an absorbing state");
      }
    }
  }

  // Basic-design group membership and common onset.
  d.basic_group_.assign(n_units, 0);
  std::optional<int> onset;
  for (std::size_t i = 0; i < n; ++i)
    if (d.obs_[i].treated && (!onset || d.period_[i] < *onset)) onset = d.period_[i];

  const bool explicit_group =
      std::any_of(d.obs_.begin(), d.obs_.end(), [](const Observation& o) { return o.group.has_value(); });
  if (explicit_group) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& o = d.obs_[i];
      if (!o.group)
        fail(ErrorCode::validation, "missing group value for unit '" + o.unit + "'");
      int u = d.unit_id_[i];
      int g = *o.group ? 1 : 0;
      if (d.by_unit_[u].front() != i && d.basic_group_[u] != g)
        fail(ErrorCode::validation, "group indicator varies within unit '" + o.unit + "'");
      d.basic_group_[u] = g;
    }
  } else {
    if (mode == DataMode::repeated_cross_section && design == Design::basic)
      fail(ErrorCode::schema,
           "repeated cross-section data needs a group column: pre-period rows carry no "
           "treatment information");
    for (int u = 0; u < n_units; ++u) d.basic_group_[u] = d.adoption_[u] >= 0 ? 1 : 0;
  }

  if (design == Design::basic) {
    if (!onset) fail(ErrorCode::validation, "no treated observations: treatment group is empty");
    d.onset_ = onset;
    for (std::size_t i = 0; i < n; ++i) {
      const int u = d.unit_id_[i];
      const bool expected = d.basic_group_[u] == 1 && d.period_[i] >= *onset;
      if (d.obs_[i].treated != expected)
        fail(ErrorCode::validation,
             "unit '" + d.unit_labels_[u] + "' at time " + std::to_string(d.obs_[i].time) +
                 ": treatment does not follow a common onset at time " +
                 std::to_string(d.period_labels_[*onset]) +
                 "; heterogeneous adoption times require the staggered (sa) design");
    }
  }
  return d;
}

std::optional<int> PanelDataset::period_index(std::int64_t label) const {
  auto it = std::lower_bound(period_labels_.begin(), period_labels_.end(), label);
  if (it == period_labels_.end() || *it != label) return std::nullopt;
  return static_cast<int>(it - period_labels_.begin());
}

// --- CSV ----------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) fail(ErrorCode::validation, "line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool parse_bool(std::string_view s, std::size_t line_no, std::string_view column) {
  auto v = lower(trim(s));
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  fail(ErrorCode::validation, "line " + std::to_string(line_no) + ": column '" +
                                  std::string(column) + "' expects 0/1/true/false, got '" +
                                  std::string(s) + "'");
}

double parse_double(std::string_view s, std::size_t line_no, std::string_view column) {
  s = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    fail(ErrorCode::validation, "line " + std::to_string(line_no) + ": column '" +
                                    std::string(column) + "' is not a finite number: '" +
                                    std::string(s) + "'");
  return v;
}

std::int64_t parse_int(std::string_view s, std::size_t line_no, std::string_view column) {
  s = trim(s);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    fail(ErrorCode::validation, "line " + std::to_string(line_no) + ": column '" +
                                    std::string(column) + "' is not an integer: '" +
                                    std::string(s) + "'");
  return v;
}

std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

PanelDataset parse_csv(std::string_view text, const Schema& schema, DataMode mode, Design design) {
  std::size_t pos = 0, line_no = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= text.size()) return false;
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    ++line_no;
    return true;
  };

  std::string_view line;
  if (!next_line(line)) fail(ErrorCode::schema, "empty file: a header row is required");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.remove_prefix(3);  // BOM
  auto header = split_csv_line(line, line_no);
  for (auto& h : header) h = std::string(trim(h));

  auto column = [&](const std::string& name, std::string_view role) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      fail(ErrorCode::schema,
           "missing column '" + name + "' (role: " + std::string(role) + ")");
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto c_unit = column(schema.unit, "unit");
  const auto c_time = column(schema.time, "time");
  const auto c_outcome = column(schema.outcome, "outcome");
  const auto c_treat = column(schema.treatment, "treatment");
  std::optional<std::size_t> c_cluster, c_group;
  if (schema.cluster) c_cluster = column(*schema.cluster, "cluster");
  if (schema.group) c_group = column(*schema.group, "group");
  std::vector<std::size_t> c_cov;
  for (const auto& name : schema.covariates) c_cov.push_back(column(name, "covariate"));

  std::vector<Observation> obs;
  while (next_line(line)) {
    if (trim(line).empty()) continue;
    auto f = split_csv_line(line, line_no);
    if (f.size() != header.size())
      fail(ErrorCode::validation, "line " + std::to_string(line_no) + ": expected " +
                                      std::to_string(header.size()) + " fields, got " +
                                      std::to_string(f.size()));
    Observation o;
    o.unit = std::string(trim(f[c_unit]));
    if (o.unit.empty())
      fail(ErrorCode::validation, "line " + std::to_string(line_no) + ": empty unit identifier");
    o.time = parse_int(f[c_time], line_no, schema.time);
    o.outcome = parse_double(f[c_outcome], line_no, schema.outcome);
    o.treated = parse_bool(f[c_treat], line_no, schema.treatment);
    if (c_cluster) o.cluster = std::string(trim(f[*c_cluster]));
    if (c_group) o.group = parse_bool(f[*c_group], line_no, *schema.group);
    for (std::size_t j = 0; j < c_cov.size(); ++j)
      o.covariates.push_back(parse_double(f[c_cov[j]], line_no, schema.covariates[j]));
    obs.push_back(std::move(o));
  }
  return PanelDataset::build(std::move(obs), mode, design, schema.covariates);
}

PanelDataset load_csv(const std::string& path, const Schema& schema, DataMode mode, Design design) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), schema, mode, design);
}

std::string to_csv(const PanelDataset& data, const Schema& schema) {
  std::string out;
  out += quote_csv(schema.unit) + "," + quote_csv(schema.time) + "," + quote_csv(schema.outcome) +
         "," + quote_csv(schema.treatment);
  if (schema.cluster) out += "," + quote_csv(*schema.cluster);
  if (schema.group) out += "," + quote_csv(*schema.group);
  for (const auto& c : schema.covariates) out += "," + quote_csv(c);
  out += "\n";
  for (const auto& o : data.observations()) {
    out += quote_csv(o.unit) + "," + std::to_string(o.time) + "," + format_double(o.outcome) +
           "," + (o.treated ? "1" : "0");
    if (schema.cluster) out += "," + quote_csv(o.cluster);
    if (schema.group) out += std::string(",") + (o.group.value_or(false) ? "1" : "0");
    for (double x : o.covariates) out += "," + format_double(x);
    out += "\n";
  }
  return out;
}

// --- groups and cells ----------------------------------------------------------

GroupAssignment assign_groups(const PanelDataset& data) {
  GroupAssignment g;
  g.design = data.design();
  g.onset = data.onset();
  g.basic_group.resize(data.n_units());
  g.adoption.resize(data.n_units());
  for (int u = 0; u < data.n_units(); ++u) {
    g.basic_group[u] = data.basic_group(u);
    g.adoption[u] = data.adoption(u);
  }
  if (g.design == Design::basic) {
    if (!g.onset) fail(ErrorCode::validation, "basic design requires a common treatment onset");
    if (data.mode() == DataMode::panel)
      for (int u = 0; u < data.n_units(); ++u)
        if (g.adoption[u] && *g.adoption[u] != *g.onset)
          fail(ErrorCode::validation, "unit '" + data.unit_label(u) +
                                          "' adopts at a different time than the common onset; "
                                          "use the staggered (sa) design");
  }
  return g;
}

Comparison basic_comparison(const PanelDataset& data) {
  require(data.onset().has_value(), ErrorCode::domain,
          "basic comparison requires a common treatment onset");
  Comparison c;
  c.anchor = *data.onset();
  c.role.resize(data.n_units());
  for (int u = 0; u < data.n_units(); ++u) c.role[u] = data.basic_group(u);
  return c;
}

CellTable::CellTable(const PanelDataset& data, const Comparison& comparison, Weights weights)
    : anchor_(comparison.anchor), n_periods_(data.n_periods()) {
  for (int g = 0; g < 2; ++g) {
    sum_[g].assign(n_periods_, 0.0);
    count_[g].assign(n_periods_, 0.0);
  }
  const bool weighted = !weights.empty();
  const std::size_t n = data.size();
  for (std::size_t i = 0; i < n; ++i) {
    const int role = comparison.role[data.unit_of(i)];
    if (role < 0) continue;
    const double w = weighted ? weights[i] : 1.0;
    if (w == 0.0) continue;
    const int t = data.period_of(i);
    sum_[role][t] += w * data.outcome(i);
    count_[role][t] += w;
  }
}

bool CellTable::has(int group, int period) const {
  return group >= 0 && group <= 1 && period >= 0 && period < n_periods_ &&
         count_[group][period] > 0.0;
}

CellStat CellTable::at(int group, int period) const {
  if (!has(group, period))
    throw EmptyCellError(group == 1 ? "treated" : "control", period);
  return {sum_[group][period] / count_[group][period], count_[group][period]};
}

CellStat cell_mean(const PanelDataset& data, const Comparison& comparison, int group, int period,
                   Weights weights) {
  return CellTable(data, comparison, weights).at(group, period);
}

CellStat cell_mean(const PanelDataset& data, int group, int period) {
  Comparison c;
  c.anchor = data.onset().value_or(0);
  c.role.resize(data.n_units());
  for (int u = 0; u < data.n_units(); ++u) c.role[u] = data.basic_group(u);
  return CellTable(data, c).at(group, period);
}

}  // namespace ddid
