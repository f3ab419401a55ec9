#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "ddid/panel_data.hpp"

namespace ddid::testing {

using Rng = std::mt19937_64;

inline double normal(Rng& rng, double sd = 1.0) { return std::normal_distribution<double>(0.0, sd)(rng); }
inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

// Panel where unit i has group g_i and outcome mean(g, t) + unit effect + noise.
template <class Mean>
PanelDataset make_panel(Rng& rng, int n_units, int n_periods, int onset, Mean mean, double noise = 1.0,
                        double drop_prob = 0.0, int n_covariates = 0) {
  std::vector<Observation> obs;
  std::vector<std::string> cov_names;
  for (int j = 0; j < n_covariates; ++j) cov_names.push_back("x" + std::to_string(j));
  for (int i = 0; i < n_units; ++i) {
    const int g = i < 2 ? 1 : i < 4 ? 0 : uniform_int(rng, 0, 1);
    const double alpha = normal(rng);
    for (int t = 0; t < n_periods; ++t) {
      // Keep the cells around onset populated by the first four units.
      if (drop_prob > 0.0 && i >= 4 && uniform(rng, 0, 1) < drop_prob) continue;
      Observation o;
      o.unit = "u" + std::to_string(i);
      o.time = 2000 + t;
      o.treated = g == 1 && t >= onset;
      o.outcome = mean(g, t) + alpha + noise * normal(rng);
      for (int j = 0; j < n_covariates; ++j) o.covariates.push_back(normal(rng));
      obs.push_back(std::move(o));
    }
  }
  return PanelDataset::build(std::move(obs), DataMode::panel, Design::basic, cov_names);
}

inline PanelDataset random_panel(Rng& rng, int n_units, int n_periods, int onset, double drop_prob = 0.0) {
  std::vector<double> trend(static_cast<std::size_t>(2 * n_periods));
  for (auto& v : trend) v = normal(rng, 2.0);
  return make_panel(
      rng, n_units, n_periods, onset, [&](int g, int t) { return trend[static_cast<std::size_t>(g * n_periods + t)]; },
      1.0, drop_prob);
}

// Repeated cross-section with random cell sizes in [lo, hi].
inline PanelDataset random_rcs(Rng& rng, int n_periods, int onset, int lo = 1, int hi = 8) {
  std::vector<Observation> obs;
  int id = 0;
  for (int t = 0; t < n_periods; ++t)
    for (int g = 0; g < 2; ++g) {
      const int n = uniform_int(rng, lo, hi);
      const double cell = normal(rng, 2.0);
      for (int k = 0; k < n; ++k) {
        Observation o;
        o.unit = "r" + std::to_string(id++);
        o.time = t;
        o.group = g == 1;
        o.treated = g == 1 && t >= onset;
        o.outcome = cell + normal(rng);
        obs.push_back(std::move(o));
      }
    }
  return PanelDataset::build(std::move(obs), DataMode::repeated_cross_section, Design::basic);
}

// Two units per group whose per-period means are exactly the given values.
inline PanelDataset toy_panel(const std::vector<double>& treated, const std::vector<double>& control, int onset) {
  std::vector<Observation> obs;
  auto add = [&](const std::string& unit, int g, const std::vector<double>& means, double shift) {
    for (std::size_t t = 0; t < means.size(); ++t) {
      Observation o;
      o.unit = unit;
      o.time = static_cast<std::int64_t>(t);
      o.treated = g == 1 && static_cast<int>(t) >= onset;
      o.outcome = means[t] + shift;
      obs.push_back(o);
    }
  };
  add("t1", 1, treated, -0.5);
  add("t2", 1, treated, 0.5);
  add("c1", 0, control, -0.25);
  add("c2", 0, control, 0.25);
  return PanelDataset::build(std::move(obs), DataMode::panel, Design::basic);
}

// Staggered panel: adoption[i] < 0 means never treated.
template <class Mean>
PanelDataset staggered_panel(Rng& rng, const std::vector<int>& adoption, int n_periods, Mean mean,
                             double noise = 1.0) {
  std::vector<Observation> obs;
  for (std::size_t i = 0; i < adoption.size(); ++i) {
    const double alpha = normal(rng);
    for (int t = 0; t < n_periods; ++t) {
      Observation o;
      o.unit = "s" + std::to_string(i);
      o.time = t;
      o.treated = adoption[i] >= 0 && t >= adoption[i];
      o.outcome = mean(adoption[i], t) + alpha + noise * normal(rng);
      obs.push_back(std::move(o));
    }
  }
  return PanelDataset::build(std::move(obs), DataMode::panel, Design::staggered);
}

// Same observations re-read under another design.
inline PanelDataset with_design(const PanelDataset& d, Design design) {
  return PanelDataset::build(d.observations(), d.mode(), design, d.covariate_names());
}

}  // namespace ddid::testing
