#include "ddid/ddid.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "ddid/commands.hpp"
#include "ddid/error.hpp"
#include "ddid/gmm.hpp"
#include "ddid/inference.hpp"

struct ddid_dataset {
  ddid::LoadedDataset loaded;
};

namespace {

thread_local std::string g_last_error;

ddid_status set_error(ddid_status s, const std::string& what) {
  g_last_error = what;
  return s;
}

template <class F>
ddid_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return DDID_OK;
  } catch (const ddid::Error& e) {
    return set_error(static_cast<ddid_status>(static_cast<int>(e.code())), e.what());
  } catch (const nlohmann::json::parse_error& e) {
    return set_error(DDID_E_INVALID_ARGUMENT, std::string("malformed JSON: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    return set_error(DDID_E_INVALID_ARGUMENT, std::string("bad JSON value: ") + e.what());
  } catch (const std::bad_alloc&) {
    return set_error(DDID_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(DDID_E_INTERNAL, std::string("internal error: ") + e.what());
  } catch (...) {
    return set_error(DDID_E_INTERNAL, "internal error: unknown exception");
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

nlohmann::json parse_config(const char* text) {
  if (!text || !*text) return nlohmann::json::object();
  return nlohmann::json::parse(text);
}

void need(const void* p, const char* what) {
  if (!p) throw ddid::Error(ddid::ErrorCode::invalid_argument, std::string(what) + " must not be NULL");
}

}  // namespace

extern "C" {

const char* ddid_version(void) { return DDID_VERSION; }

const char* ddid_last_error(void) { return g_last_error.c_str(); }

int ddid_status_is_user_error(ddid_status s) { return s != DDID_OK && s != DDID_E_INTERNAL; }

const char* ddid_status_name(ddid_status s) {
  switch (s) {
    case DDID_OK: return "ok";
    case DDID_E_INVALID_ARGUMENT: return "invalid-argument";
    case DDID_E_IO: return "io";
    case DDID_E_SCHEMA: return "schema";
    case DDID_E_VALIDATION: return "validation";
    case DDID_E_DOMAIN: return "domain";
    case DDID_E_EMPTY_CELL: return "empty-cell";
    case DDID_E_DEGENERATE_WEIGHT: return "degenerate-weight";
    case DDID_E_NEAR_SINGULAR: return "near-singular";
    case DDID_E_RANK_DEFICIENT: return "rank-deficient";
    case DDID_E_UNSTABLE_RESAMPLING: return "unstable-resampling";
    case DDID_E_NO_CLEAN_CONTROL: return "no-clean-control";
    case DDID_E_INTERNAL: return "internal";
  }
  return "unknown";
}

void ddid_string_free(char* s) { std::free(s); }

ddid_status ddid_dataset_load_csv(const char* source_json, ddid_dataset** out) {
  return guarded([&] {
    need(source_json, "source_json");
    need(out, "out");
    *out = nullptr;
    auto* ds = new ddid_dataset{ddid::load_dataset(parse_config(source_json))};
    *out = ds;
  });
}

ddid_status ddid_dataset_parse_csv(const char* csv, const char* source_json, ddid_dataset** out) {
  return guarded([&] {
    need(csv, "csv");
    need(out, "out");
    *out = nullptr;
    auto* ds = new ddid_dataset{ddid::load_dataset_text(csv, parse_config(source_json))};
    *out = ds;
  });
}

void ddid_dataset_free(ddid_dataset* ds) { delete ds; }

ddid_status ddid_dataset_info(const ddid_dataset* ds, char** json_out) {
  return guarded([&] {
    need(ds, "dataset");
    need(json_out, "json_out");
    *json_out = dup(ddid::dataset_summary(ds->loaded).dump(2));
  });
}

ddid_status ddid_assess(const ddid_dataset* ds, const char* config_json, char** json_out) {
  return guarded([&] {
    need(ds, "dataset");
    need(json_out, "json_out");
    *json_out = dup(ddid::cmd_assess(ds->loaded, parse_config(config_json)).dump(2));
  });
}

ddid_status ddid_estimate(const ddid_dataset* ds, const char* config_json, char** json_out) {
  return guarded([&] {
    need(ds, "dataset");
    need(json_out, "json_out");
    *json_out = dup(ddid::cmd_estimate(ds->loaded, parse_config(config_json)).dump(2));
  });
}

ddid_status ddid_plot_data(const ddid_dataset* ds, const char* config_json, char** csv_out) {
  return guarded([&] {
    need(ds, "dataset");
    need(csv_out, "csv_out");
    *csv_out = dup(ddid::cmd_plot_data(ds->loaded, parse_config(config_json)));
  });
}

ddid_status ddid_simulate(const char* config_json, char** json_out, char** csv_out) {
  return guarded([&] {
    need(json_out, "json_out");
    std::string csv;
    const auto doc = ddid::cmd_simulate(parse_config(config_json), csv_out ? &csv : nullptr);
    char* j = dup(doc.dump(2));
    if (csv_out) {
      try {
        *csv_out = dup(csv);
      } catch (...) {
        std::free(j);
        throw;
      }
    }
    *json_out = j;
  });
}

ddid_status ddid_render_text(const char* json_doc, char** text_out) {
  return guarded([&] {
    need(json_doc, "json_doc");
    need(text_out, "text_out");
    *text_out = dup(ddid::render_text(nlohmann::json::parse(json_doc)));
  });
}

ddid_status ddid_gmm_combine(const double* moments, const double* weight, size_t k, double* point_out,
                             double* weights_out) {
  return guarded([&] {
    need(moments, "moments");
    need(weight, "weight");
    need(point_out, "point_out");
    if (k == 0) throw ddid::Error(ddid::ErrorCode::invalid_argument, "k must be >= 1");
    ddid::MomentVector m;
    m.estimates.assign(moments, moments + k);
    ddid::WeightMatrix w;
    w.entries.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for (size_t i = 0; i < k; ++i)
      for (size_t j = 0; j < k; ++j)
        w.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = weight[i * k + j];
    const auto r = ddid::gmm_combine(m, w);
    *point_out = r.point;
    if (weights_out)
      for (size_t i = 0; i < k; ++i) weights_out[i] = r.weights[i];
  });
}

ddid_status ddid_equivalence_bound(double point, double se, double baseline_sd, double* bound_out) {
  return guarded([&] {
    need(bound_out, "bound_out");
    std::optional<ddid::Baseline> b;
    if (baseline_sd > 0.0) b = ddid::Baseline{0.0, baseline_sd};
    *bound_out = ddid::equivalence_ci(point, se, b).bound;
  });
}

}  // extern "C"
