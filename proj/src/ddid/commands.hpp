#pragma once

#include <string>
#include <string_view>

#include "json.hpp"

#include "ddid/panel_data.hpp"

namespace ddid {

std::string_view tool_version();

struct LoadedDataset {
  PanelDataset data;
  Schema schema;
  std::string path;
};

// Schema document: {"path", "unit", "time", "outcome", "treatment", "cluster",
// "group", "covariates": [...], "mode": "panel"|"rcs", "design": "basic"|"sa"}.
LoadedDataset load_dataset(const nlohmann::json& source);
LoadedDataset load_dataset_text(std::string_view csv, const nlohmann::json& source);

nlohmann::json dataset_summary(const LoadedDataset& ds);

// Every document carries tool, command, seed, rng, and the resolved config.
nlohmann::json cmd_assess(const LoadedDataset& ds, const nlohmann::json& config);
nlohmann::json cmd_estimate(const LoadedDataset& ds, const nlohmann::json& config);
// Tidy CSV (group, time, mean, n) preceded by '#' metadata lines.
std::string cmd_plot_data(const LoadedDataset& ds, const nlohmann::json& config);
// Returns the JSON document; `csv` receives the results table.
nlohmann::json cmd_simulate(const nlohmann::json& config, std::string* csv);

// Human-readable rendering of any command document.
std::string render_text(const nlohmann::json& doc);

}  // namespace ddid
