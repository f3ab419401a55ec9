// ddid command-line front end. Talks to the library through the C API only.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ddid/ddid.h"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUser = 2;

struct Owned {
  char* p = nullptr;
  ~Owned() { ddid_string_free(p); }
};

struct DataFlags {
  std::string path;
  std::string unit = "unit", time = "time", outcome = "outcome", treatment = "treatment";
  std::string cluster, group, covariates;
  std::string mode = "panel", design = "basic";
};

struct RunFlags {
  std::optional<int> bootstrap, threads, depth, lead;
  std::optional<std::uint64_t> seed;
  std::optional<double> level, baseline_mean, baseline_sd;
  std::string regime, orders, periods;
  bool no_standardize = false;
  std::string out;
  bool text = false;
};

struct SimFlags {
  std::optional<int> n, periods, reps, bootstrap, threads;
  std::optional<double> rho, tau, innovation_variance, ci_level;
  std::optional<std::uint64_t> seed;
  std::string scenario, regime, orders, out, csv;
  bool replicates = false, text = false;
};

class Failure {
 public:
  Failure(int code, std::string msg) : code(code), msg(std::move(msg)) {}
  int code;
  std::string msg;
};

void check(ddid_status s) {
  if (s == DDID_OK) return;
  throw Failure(ddid_status_is_user_error(s) ? kExitUser : kExitInternal,
                std::string(ddid_status_name(s)) + ": " + ddid_last_error());
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

json int_list(const std::string& s, const char* flag) {
  json a = json::array();
  for (const auto& x : split(s)) {
    try {
      std::size_t pos = 0;
      long long v = std::stoll(x, &pos);
      if (pos != x.size()) throw std::invalid_argument(x);
      a.push_back(v);
    } catch (const std::exception&) {
      throw Failure(kExitUser, std::string("--") + flag + ": '" + x + "' is not an integer");
    }
  }
  return a;
}

void add_data_flags(CLI::App* app, DataFlags& d) {
  app->add_option("--data", d.path, "long-format CSV file")->required();
  app->add_option("--unit", d.unit, "unit identifier column")->capture_default_str();
  app->add_option("--time", d.time, "integer period column")->capture_default_str();
  app->add_option("--outcome", d.outcome, "outcome column")->capture_default_str();
  app->add_option("--treatment", d.treatment, "0/1 treatment column")->capture_default_str();
  app->add_option("--cluster", d.cluster, "bootstrap cluster column (default: unit)");
  app->add_option("--group", d.group, "treatment-group column (repeated cross-sections)");
  app->add_option("--covariates", d.covariates, "comma-separated covariate columns");
  app->add_option("--mode", d.mode, "panel or rcs")->capture_default_str();
  app->add_option("--design", d.design, "basic or sa")->capture_default_str();
}

void add_run_flags(CLI::App* app, RunFlags& r) {
  app->add_option("--bootstrap", r.bootstrap, "bootstrap iterations B (default 500)");
  app->add_option("--seed", r.seed, "bootstrap seed");
  app->add_option("--threads", r.threads, "worker threads (default: DDID_THREADS or 1)");
  app->add_option("--level", r.level, "confidence level (default 0.95)");
  app->add_option("--periods", r.periods, "comma-separated adoption periods (sa design)");
  app->add_option("--orders", r.orders, "comma-separated difference orders");
  app->add_option("--out", r.out, "write the JSON report here and a text rendering next to it");
  app->add_flag("--text", r.text, "print the text rendering instead of JSON");
}

ddid_dataset* load(const DataFlags& d) {
  json src = {{"path", d.path},       {"unit", d.unit},   {"time", d.time},
              {"outcome", d.outcome}, {"treatment", d.treatment},
              {"mode", d.mode},       {"design", d.design}};
  if (!d.cluster.empty()) src["cluster"] = d.cluster;
  if (!d.group.empty()) src["group"] = d.group;
  src["covariates"] = split(d.covariates);
  ddid_dataset* ds = nullptr;
  check(ddid_dataset_load_csv(src.dump().c_str(), &ds));
  return ds;
}

json run_config(const RunFlags& r) {
  json c = json::object();
  if (r.bootstrap) c["bootstrap"] = *r.bootstrap;
  if (r.seed) c["seed"] = *r.seed;
  if (r.threads) c["threads"] = *r.threads;
  if (r.level) c["level"] = *r.level;
  if (!r.orders.empty()) c["orders"] = int_list(r.orders, "orders");
  if (!r.periods.empty()) c["periods"] = int_list(r.periods, "periods");
  return c;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Failure(kExitUser, "cannot write '" + path + "'");
  f << content;
  if (!f) throw Failure(kExitUser, "failed writing '" + path + "'");
}

std::string sibling(const std::string& path, const std::string& ext) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) return path.substr(0, dot) + ext;
  return path + ext;
}

void emit(const std::string& json_doc, const std::string& out, bool text) {
  Owned rendered;
  check(ddid_render_text(json_doc.c_str(), &rendered.p));
  if (!out.empty()) {
    write_file(out, json_doc + "\n");
    write_file(sibling(out, ".txt"), rendered.p);
  }
  if (text) std::cout << rendered.p;
  else if (out.empty()) std::cout << json_doc << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ddid: double difference-in-differences estimation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ddid_version()));

  DataFlags d_assess, d_estimate, d_plot;
  RunFlags r_assess, r_estimate;
  SimFlags sim;
  std::string plot_out;

  auto* assess = app.add_subcommand("assess", "pre-trend tests and equivalence intervals");
  add_data_flags(assess, d_assess);
  add_run_flags(assess, r_assess);
  assess->add_option("--depth", r_assess.depth, "pre-period gaps to test (sa design)");
  assess->add_flag("--no-standardize", r_assess.no_standardize, "report equivalence bounds in outcome units");
  assess->add_option("--baseline-mean", r_assess.baseline_mean, "override the baseline mean");
  assess->add_option("--baseline-sd", r_assess.baseline_sd, "override the baseline standard deviation");

  auto* estimate = app.add_subcommand("estimate", "double DID estimate of the ATT");
  add_data_flags(estimate, d_estimate);
  add_run_flags(estimate, r_estimate);
  estimate->add_option("--regime", r_estimate.regime, "extended or trends-in-trends")->required();
  estimate->add_option("--lead", r_estimate.lead, "periods after adoption (s)");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo study");
  simulate->add_option("--n", sim.n, "units per replicate (default 1000)");
  simulate->add_option("--n-periods", sim.periods, "panel length (default 5)");
  simulate->add_option("--scenario", sim.scenario, "1, 2, or polynomial:K");
  simulate->add_option("--rho", sim.rho, "AR(1) autocorrelation (default 0.6)");
  simulate->add_option("--tau", sim.tau, "true ATT (default 0.2)");
  simulate->add_option("--reps", sim.reps, "replications M (default 1000)");
  simulate->add_option("--seed", sim.seed, "seed");
  simulate->add_option("--bootstrap", sim.bootstrap, "bootstrap iterations per replicate (default 200)");
  simulate->add_option("--innovation-variance", sim.innovation_variance, "AR(1) innovation variance (default 3)");
  simulate->add_option("--ci-level", sim.ci_level, "coverage CI level (default 0.90)");
  simulate->add_option("--regime", sim.regime, "double DID regime (default by scenario)");
  simulate->add_option("--orders", sim.orders, "comma-separated orders combined by the double DID");
  simulate->add_option("--threads", sim.threads, "worker threads (default: DDID_THREADS or 1)");
  simulate->add_flag("--replicates", sim.replicates, "include per-replicate estimates in the JSON");
  simulate->add_option("--out", sim.out, "JSON output path");
  simulate->add_option("--csv", sim.csv, "results table path (default: next to --out)");
  simulate->add_flag("--text", sim.text, "print the text rendering instead of JSON");

  auto* plot = app.add_subcommand("plot-data", "group-by-period means as CSV");
  add_data_flags(plot, d_plot);
  plot->add_option("--out", plot_out, "CSV output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUser;
  }

  try {
    if (assess->parsed() || estimate->parsed()) {
      const bool is_assess = assess->parsed();
      const auto& df = is_assess ? d_assess : d_estimate;
      const auto& rf = is_assess ? r_assess : r_estimate;
      std::unique_ptr<ddid_dataset, void (*)(ddid_dataset*)> ds(load(df), ddid_dataset_free);
      json cfg = run_config(rf);
      Owned doc;
      if (is_assess) {
        if (rf.depth) cfg["depth"] = *rf.depth;
        if (rf.no_standardize) cfg["standardize"] = false;
        if (rf.baseline_sd) {
          cfg["baseline_sd"] = *rf.baseline_sd;
          cfg["baseline_mean"] = rf.baseline_mean.value_or(0.0);
        }
        check(ddid_assess(ds.get(), cfg.dump().c_str(), &doc.p));
      } else {
        cfg["regime"] = rf.regime;
        if (rf.lead) cfg["lead"] = *rf.lead;
        check(ddid_estimate(ds.get(), cfg.dump().c_str(), &doc.p));
      }
      emit(doc.p, rf.out, rf.text);
    } else if (plot->parsed()) {
      std::unique_ptr<ddid_dataset, void (*)(ddid_dataset*)> ds(load(d_plot), ddid_dataset_free);
      Owned csv;
      check(ddid_plot_data(ds.get(), "{}", &csv.p));
      if (plot_out.empty()) std::cout << csv.p;
      else write_file(plot_out, csv.p);
    } else if (simulate->parsed()) {
      json cfg = json::object();
      if (sim.n) cfg["n"] = *sim.n;
      if (sim.periods) cfg["periods"] = *sim.periods;
      if (!sim.scenario.empty()) cfg["scenario"] = sim.scenario;
      if (sim.rho) cfg["rho"] = *sim.rho;
      if (sim.tau) cfg["tau"] = *sim.tau;
      if (sim.reps) cfg["reps"] = *sim.reps;
      if (sim.seed) cfg["seed"] = *sim.seed;
      if (sim.bootstrap) cfg["bootstrap"] = *sim.bootstrap;
      if (sim.innovation_variance) cfg["innovation_variance"] = *sim.innovation_variance;
      if (sim.ci_level) cfg["ci_level"] = *sim.ci_level;
      if (!sim.regime.empty()) cfg["regime"] = sim.regime;
      if (!sim.orders.empty()) cfg["orders"] = int_list(sim.orders, "orders");
      if (sim.threads) cfg["threads"] = *sim.threads;
      if (sim.replicates) cfg["replicates"] = true;
      Owned doc, csv;
      check(ddid_simulate(cfg.dump().c_str(), &doc.p, &csv.p));
      emit(doc.p, sim.out, sim.text);
      std::string csv_path = sim.csv;
      if (csv_path.empty() && !sim.out.empty()) csv_path = sibling(sim.out, ".csv");
      if (!csv_path.empty()) write_file(csv_path, csv.p);
    }
  } catch (const Failure& f) {
    std::cerr << "ddid: " << f.msg << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "ddid: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}
