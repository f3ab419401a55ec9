#include "ddid/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "ddid/did_estimators.hpp"
#include "ddid/double_did.hpp"
#include "ddid/error.hpp"
#include "ddid/inference.hpp"
#include "ddid/monte_carlo.hpp"
#include "ddid/rng.hpp"
#include "ddid/staggered.hpp"

#ifndef DDID_VERSION
#define DDID_VERSION "0.0.0"
#endif

using nlohmann::json;

namespace ddid {

std::string_view tool_version() { return DDID_VERSION; }

namespace {

void check_keys(const json& cfg, std::initializer_list<std::string_view> allowed, std::string_view where) {
  require(cfg.is_object(), ErrorCode::invalid_argument, std::string(where) + " must be a JSON object");
  for (const auto& [key, _] : cfg.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      fail(ErrorCode::invalid_argument, "unknown " + std::string(where) + " key '" + key + "'");
}

template <class T>
T get_or(const json& cfg, const char* key, T fallback) {
  if (!cfg.contains(key) || cfg.at(key).is_null()) return fallback;
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::invalid_argument, std::string("config key '") + key + "' has the wrong type");
  }
}

std::optional<std::string> opt_string(const json& cfg, const char* key) {
  if (!cfg.contains(key) || cfg.at(key).is_null()) return std::nullopt;
  auto s = get_or<std::string>(cfg, key, "");
  if (s.empty()) return std::nullopt;
  return s;
}

json header(std::string_view command, const json& seed) {
  return {{"tool", {{"name", "ddid"}, {"version", std::string(tool_version())}}},
          {"command", std::string(command)},
          {"seed", seed},
          {"rng", std::string(rng::kGeneratorName)}};
}

BootstrapSpec bootstrap_spec(const json& cfg) {
  BootstrapSpec b;
  b.iterations = get_or(cfg, "bootstrap", b.iterations);
  b.seed = get_or<std::uint64_t>(cfg, "seed", b.seed);
  b.threads = get_or(cfg, "threads", b.threads);
  b.max_redraws = get_or(cfg, "max_redraws", b.max_redraws);
  require(b.iterations >= 2, ErrorCode::invalid_argument, "bootstrap iterations must be >= 2");
  require(b.threads >= 0, ErrorCode::invalid_argument, "threads must be >= 0");
  return b;
}

json bootstrap_json(const BootstrapSpec& b) {
  // Worker count is deliberately absent: it never changes results.
  return {{"iterations", b.iterations}, {"seed", b.seed}, {"max_redraws", b.max_redraws},
          {"scheme", "cluster-block"}};
}

double level_of(const json& cfg) {
  const double level = get_or(cfg, "level", 0.95);
  require(level > 0.0 && level < 1.0, ErrorCode::invalid_argument, "level must lie in (0, 1)");
  return level;
}

std::int64_t label(const PanelDataset& d, int t) { return d.period_label(t); }

std::vector<int> period_indices(const PanelDataset& d, const json& cfg) {
  std::vector<int> out;
  for (auto l : get_or<std::vector<std::int64_t>>(cfg, "periods", {})) {
    auto idx = d.period_index(l);
    if (!idx) fail(ErrorCode::invalid_argument, "period " + std::to_string(l) + " does not occur in the data");
    out.push_back(*idx);
  }
  return out;
}

json labels_of(const PanelDataset& d, const std::vector<int>& idx) {
  json a = json::array();
  for (int t : idx) a.push_back(label(d, t));
  return a;
}

json data_config(const LoadedDataset& ds) {
  json j = {{"path", ds.path},
            {"mode", std::string(to_string(ds.data.mode()))},
            {"design", std::string(to_string(ds.data.design()))},
            {"unit", ds.schema.unit},
            {"time", ds.schema.time},
            {"outcome", ds.schema.outcome},
            {"treatment", ds.schema.treatment},
            {"cluster", ds.schema.cluster ? json(*ds.schema.cluster) : json(ds.schema.unit)},
            {"group", ds.schema.group ? json(*ds.schema.group) : json()},
            {"covariates", ds.schema.covariates}};
  return j;
}

std::optional<Baseline> baseline_override(const json& cfg) {
  if (!cfg.contains("baseline_sd") || cfg.at("baseline_sd").is_null()) return std::nullopt;
  return Baseline{get_or(cfg, "baseline_mean", 0.0), get_or(cfg, "baseline_sd", 0.0)};
}

std::vector<std::string> merged_notes(const std::vector<std::string>& a) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& n : a)
    if (seen.insert(n).second) out.push_back(n);
  return out;
}

}  // namespace

namespace {

void check_source_keys(const json& source) {
  check_keys(source, {"path", "unit", "time", "outcome", "treatment", "cluster", "group", "covariates", "mode",
                      "design"},
             "dataset");
}

}  // namespace

LoadedDataset load_dataset_text(std::string_view csv, const json& source) {
  check_source_keys(source);
  Schema schema;
  schema.unit = get_or<std::string>(source, "unit", schema.unit);
  schema.time = get_or<std::string>(source, "time", schema.time);
  schema.outcome = get_or<std::string>(source, "outcome", schema.outcome);
  schema.treatment = get_or<std::string>(source, "treatment", schema.treatment);
  schema.cluster = opt_string(source, "cluster");
  schema.group = opt_string(source, "group");
  schema.covariates = get_or<std::vector<std::string>>(source, "covariates", {});
  const auto mode = parse_data_mode(get_or<std::string>(source, "mode", "panel"));
  const auto design = parse_design(get_or<std::string>(source, "design", "basic"));
  auto data = parse_csv(csv, schema, mode, design);
  return LoadedDataset{std::move(data), std::move(schema), get_or<std::string>(source, "path", "")};
}

LoadedDataset load_dataset(const json& source) {
  check_source_keys(source);
  const auto path = get_or<std::string>(source, "path", "");
  require(!path.empty(), ErrorCode::invalid_argument, "dataset path is required");
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) fail(ErrorCode::io, "cannot open '" + path + "'");
  std::string text;
  char buf[1 << 16];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, n);
  std::fclose(f);
  return load_dataset_text(text, source);
}

json dataset_summary(const LoadedDataset& ds) {
  const auto& d = ds.data;
  json j = {{"observations", d.size()},
            {"units", d.n_units()},
            {"clusters", d.n_clusters()},
            {"periods", d.period_labels()},
            {"mode", std::string(to_string(d.mode()))},
            {"design", std::string(to_string(d.design()))},
            {"balanced", d.balanced()}};
  j["onset"] = d.onset() && d.design() == Design::basic ? json(label(d, *d.onset())) : json();
  if (d.design() == Design::staggered) j["adoption_periods"] = labels_of(d, adoption_periods(d));
  return j;
}

json cmd_assess(const LoadedDataset& ds, const json& config) {
  check_keys(config, {"bootstrap", "seed", "threads", "max_redraws", "level", "depth", "periods", "orders",
                      "standardize", "baseline_mean", "baseline_sd"},
             "assess config");
  const auto& d = ds.data;
  const auto spec = bootstrap_spec(config);
  const double level = level_of(config);
  const bool standardize = get_or(config, "standardize", true);
  json doc = header("assess", spec.seed);
  json cfg = {{"data", data_config(ds)}, {"bootstrap", bootstrap_json(spec)}, {"level", level},
              {"standardize", standardize}, {"equivalence_level", 0.95}};
  json rows = json::array();
  std::vector<std::string> notes(d.notes());

  if (d.design() == Design::basic) {
    require(d.onset().has_value(), ErrorCode::domain, "no treated observations: treatment onset is undefined");
    const int n_pre = *d.onset();
    if (n_pre < 2)
      fail(ErrorCode::domain, "pre-trend assessment needs at least 2 pre-treatment periods, found " +
                                  std::to_string(n_pre));
    auto orders = get_or<std::vector<int>>(config, "orders", {});
    if (orders.empty()) {
      orders.push_back(1);
      if (n_pre >= 3) orders.push_back(2);
    }
    for (int k : orders)
      require(k == 1 || k == 2, ErrorCode::invalid_argument, "assessment orders are 1 (level) and 2 (trend)");
    cfg["orders"] = orders;
    for (int k : orders) {
      PretrendOptions po;
      po.order = k == 1 ? PretrendOrder::level : PretrendOrder::trend;
      po.level = level;
      po.standardize = standardize;
      po.baseline = baseline_override(config);
      auto rep = pretrend_test(d, po, spec);
      json row = to_json(rep);
      row["order"] = k;
      std::vector<int> used;
      for (int t = *d.onset() - 1 - k; t <= *d.onset() - 1; ++t) used.push_back(t);
      row["periods"] = labels_of(d, used);
      rows.push_back(std::move(row));
    }
  } else {
    SaPretrendOptions so;
    so.depth = get_or(config, "depth", 1);
    so.periods = period_indices(d, config);
    so.level = level;
    so.standardize = standardize;
    cfg["depth"] = so.depth;
    const auto rep = sa_pretrend(d, so, spec);
    std::set<int> all;
    for (const auto& g : rep.gaps) {
      json row = to_json(g.report);
      row["gap"] = g.gap + 1;
      row["adoption_periods"] = labels_of(d, g.periods);
      row["pi"] = g.pi;
      rows.push_back(std::move(row));
      all.insert(g.periods.begin(), g.periods.end());
    }
    cfg["periods"] = labels_of(d, {all.begin(), all.end()});
    notes.insert(notes.end(), rep.notes.begin(), rep.notes.end());
  }
  doc["config"] = std::move(cfg);
  doc["dataset"] = dataset_summary(ds);
  doc["results"] = std::move(rows);
  doc["notes"] = merged_notes(notes);
  return doc;
}

json cmd_estimate(const LoadedDataset& ds, const json& config) {
  check_keys(config, {"bootstrap", "seed", "threads", "max_redraws", "level", "regime", "orders", "lead",
                      "periods"},
             "estimate config");
  const auto& d = ds.data;
  const auto spec = bootstrap_spec(config);
  const double level = level_of(config);
  const auto regime_name = opt_string(config, "regime");
  if (!regime_name)
    fail(ErrorCode::invalid_argument, "the identifying regime must be chosen explicitly "
                                      "(extended or trends-in-trends)");
  const Regime regime = parse_regime(*regime_name);
  const int lead = get_or(config, "lead", 0);
  const auto orders = get_or<std::vector<int>>(config, "orders", {});
  const bool use_cov = !d.covariate_names().empty();

  json doc = header("estimate", spec.seed);
  json cfg = {{"data", data_config(ds)}, {"bootstrap", bootstrap_json(spec)}, {"level", level},
              {"regime", std::string(to_string(regime))}, {"lead", lead},
              {"covariate_adjusted", use_cov}};
  json results = json::array();
  std::vector<std::string> notes(d.notes());

  if (d.design() == Design::basic) {
    require(d.onset().has_value(), ErrorCode::domain, "no treated observations: treatment onset is undefined");
    DoubleDidOptions o;
    o.regime = regime;
    o.orders = orders;
    o.lead = lead;
    o.level = level;
    o.use_covariates = use_cov;
    const auto r = double_did(d, o, spec);
    cfg["orders"] = r.orders;
    json row = to_json(r.report);
    row["target_period"] = label(d, *d.onset() + lead);
    results.push_back(std::move(row));
    notes.insert(notes.end(), r.report.notes.begin(), r.report.notes.end());
  } else {
    SaOptions o;
    o.regime = regime;
    o.orders = orders;
    o.lead = lead;
    o.level = level;
    o.periods = period_indices(d, config);
    o.use_covariates = use_cov;
    const auto r = sa_double_did(d, o, spec);
    cfg["orders"] = r.orders;
    std::vector<int> used;
    for (const auto& p : r.periods) used.push_back(p.period);
    cfg["periods"] = labels_of(d, used);
    json avg = to_json(r.average_report);
    avg["pi"] = json::array();
    for (const auto& p : r.periods) avg["pi"].push_back(p.pi);
    results.push_back(std::move(avg));
    json per = json::array();
    for (const auto& p : r.periods) {
      json row = to_json(p.report);
      row["period"] = label(d, p.period);
      row["pi"] = p.pi;
      row["n_treated"] = p.n_treated;
      per.push_back(std::move(row));
    }
    doc["periods"] = std::move(per);
    doc["dropped_periods"] = labels_of(d, r.dropped);
    notes.insert(notes.end(), r.notes.begin(), r.notes.end());
    for (const auto& p : r.periods) notes.insert(notes.end(), p.report.notes.begin(), p.report.notes.end());
    notes.insert(notes.end(), r.average_report.notes.begin(), r.average_report.notes.end());
  }
  doc["config"] = std::move(cfg);
  doc["dataset"] = dataset_summary(ds);
  doc["results"] = std::move(results);
  doc["notes"] = merged_notes(notes);
  return doc;
}

std::string cmd_plot_data(const LoadedDataset& ds, const json& config) {
  check_keys(config, {}, "plot-data config");
  const auto& d = ds.data;
  json meta = header("plot-data", nullptr);
  meta["config"] = {{"data", data_config(ds)}};
  std::string out = "# " + meta.dump() + "\n";
  out += "group,time,mean,n\n";

  std::vector<std::string> names;
  std::vector<int> key(static_cast<std::size_t>(d.n_units()));
  if (d.design() == Design::basic) {
    names = {"0", "1"};
    for (int u = 0; u < d.n_units(); ++u) key[u] = d.basic_group(u);
  } else {
    const auto ap = adoption_periods(d);
    for (int t : ap) names.push_back(std::to_string(label(d, t)));
    names.push_back("never");
    for (int u = 0; u < d.n_units(); ++u) {
      const auto a = d.adoption(u);
      key[u] = a ? static_cast<int>(std::lower_bound(ap.begin(), ap.end(), *a) - ap.begin())
                 : static_cast<int>(ap.size());
    }
  }
  const std::size_t ng = names.size(), nt = static_cast<std::size_t>(d.n_periods());
  std::vector<double> sum(ng * nt, 0.0), cnt(ng * nt, 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto c = static_cast<std::size_t>(key[d.unit_of(i)]) * nt + static_cast<std::size_t>(d.period_of(i));
    sum[c] += d.outcome(i);
    cnt[c] += 1.0;
  }
  // Treated group first in the basic design, cohorts in adoption order otherwise.
  std::vector<std::size_t> order;
  if (d.design() == Design::basic) order = {1, 0};
  else for (std::size_t g = 0; g < ng; ++g) order.push_back(g);
  for (auto g : order)
    for (std::size_t t = 0; t < nt; ++t) {
      const auto c = g * nt + t;
      if (cnt[c] == 0.0) continue;
      out += names[g] + "," + std::to_string(label(d, static_cast<int>(t))) + "," + json(sum[c] / cnt[c]).dump() +
             "," + std::to_string(static_cast<long long>(cnt[c])) + "\n";
    }
  return out;
}

json cmd_simulate(const json& config, std::string* csv) {
  check_keys(config, {"n", "periods", "scenario", "rho", "tau", "reps", "seed", "innovation_variance",
                      "bootstrap", "ci_level", "regime", "orders", "threads", "replicates"},
             "simulate config");
  SimulationConfig c;
  c.n = get_or(config, "n", c.n);
  c.periods = get_or(config, "periods", c.periods);
  if (auto s = opt_string(config, "scenario")) parse_scenario(*s, c);
  c.rho = get_or(config, "rho", c.rho);
  c.tau = get_or(config, "tau", c.tau);
  c.reps = get_or(config, "reps", c.reps);
  c.seed = get_or<std::uint64_t>(config, "seed", c.seed);
  c.innovation_variance = get_or(config, "innovation_variance", c.innovation_variance);
  c.bootstrap = get_or(config, "bootstrap", c.bootstrap);
  c.ci_level = get_or(config, "ci_level", c.ci_level);
  if (auto r = opt_string(config, "regime")) c.regime = parse_regime(*r);
  c.orders = get_or<std::vector<int>>(config, "orders", {});
  c.threads = get_or(config, "threads", c.threads);
  const bool replicates = get_or(config, "replicates", false);
  validate(c);

  const auto res = run_study(c);
  json doc = header("simulate", c.seed);
  json cfg = to_json(c);
  cfg["replicates"] = replicates;
  doc["config"] = std::move(cfg);
  doc["results"] = results_json(res, replicates);
  doc["notes"] = json::array();
  if (csv) {
    json meta = header("simulate", c.seed);
    meta["config"] = doc["config"];
    *csv = "# " + meta.dump() + "\n" + results_csv(res);
  }
  return doc;
}

namespace {

std::string num(const json& v, int prec = 4) {
  if (v.is_null()) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v.get<double>());
  return buf;
}

std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

void render_reports(std::string& out, const json& rows) {
  out += pad("estimator", 30) + pad("point", 11) + pad("se", 10) + pad("ci_lower", 11) + pad("ci_upper", 11) +
         pad("p_value", 9) + "equiv_bound\n";
  for (const auto& r : rows) {
    out += pad(r.value("estimator", std::string("?")), 30) + pad(num(r["point"]), 11) + pad(num(r["se"]), 10) +
           pad(num(r["ci_lower"]), 11) + pad(num(r["ci_upper"]), 11) + pad(num(r["p_value"], 3), 9) +
           num(r["equiv_bound"], 3) + "\n";
    if (r.contains("weights") && !r["weights"].empty()) {
      out += "    weights:";
      for (std::size_t i = 0; i < r["weights"].size(); ++i)
        out += " " + r["weight_labels"][i].get<std::string>() + "=" + num(r["weights"][i]);
      out += "  (" + r.value("weight_provenance", std::string("")) + ")\n";
    }
  }
}

}  // namespace

std::string render_text(const json& doc) {
  std::string out = "ddid " + doc["tool"]["version"].get<std::string>() + " " +
                    doc["command"].get<std::string>() + "  seed=" +
                    (doc["seed"].is_null() ? std::string("none") : doc["seed"].dump()) + "\n";
  out += "config: " + doc["config"].dump() + "\n\n";
  const auto cmd = doc["command"].get<std::string>();
  if (cmd == "simulate") {
    out += pad("estimator", 18) + pad("abs_bias", 11) + pad("se", 10) + "coverage\n";
    for (const auto& r : doc["results"])
      out += pad(r["estimator"].get<std::string>(), 18) + pad(num(r["abs_bias"]), 11) + pad(num(r["se"]), 10) +
             num(r["coverage"], 3) + "\n";
  } else {
    render_reports(out, doc["results"]);
    if (doc.contains("periods") && doc["periods"].is_array()) {
      out += "\nper adoption period:\n";
      render_reports(out, doc["periods"]);
    }
  }
  if (doc.contains("notes") && !doc["notes"].empty()) {
    out += "\nnotes:\n";
    for (const auto& n : doc["notes"]) out += "  - " + n.get<std::string>() + "\n";
  }
  return out;
}

}  // namespace ddid
