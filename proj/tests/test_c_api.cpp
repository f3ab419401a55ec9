#include "doctest.h"

#include <cmath>
#include <cstring>
#include <string>

#include "ddid/ddid.h"
#include "json.hpp"

using nlohmann::json;

namespace {

const char* kCsv =
    "unit,time,outcome,treatment\n"
    "a,1,0.1,0\na,2,1.2,0\na,3,3.3,1\n"
    "b,1,-0.4,0\nb,2,0.9,0\nb,3,2.6,1\n"
    "c,1,0.0,0\nc,2,0.4,0\nc,3,1.7,0\n"
    "d,1,0.3,0\nd,2,0.8,0\nd,3,1.1,0\n"
    "e,1,0.2,0\ne,2,0.5,0\ne,3,1.5,0\n"
    "f,1,0.6,0\nf,2,1.0,1\nf,3,2.9,1\n";

std::string take(char* s) {
  std::string out = s ? s : "";
  ddid_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("version and status helpers") {
  CHECK(std::strlen(ddid_version()) > 0);
  CHECK(std::string(ddid_status_name(DDID_E_EMPTY_CELL)) == "empty-cell");
  CHECK(ddid_status_is_user_error(DDID_E_DOMAIN));
  CHECK_FALSE(ddid_status_is_user_error(DDID_E_INTERNAL));
  CHECK_FALSE(ddid_status_is_user_error(DDID_OK));
}

TEST_CASE("dataset parse errors carry a message") {
  ddid_dataset* ds = nullptr;
  CHECK(ddid_dataset_parse_csv(kCsv, "{}", &ds) == DDID_E_VALIDATION);
  CHECK(ds == nullptr);
  CHECK(std::string(ddid_last_error()).find("staggered") != std::string::npos);
  CHECK(ddid_dataset_parse_csv(kCsv, "{not json", &ds) == DDID_E_INVALID_ARGUMENT);
  CHECK(ddid_dataset_parse_csv(nullptr, "{}", &ds) == DDID_E_INVALID_ARGUMENT);
  CHECK(ddid_dataset_load_csv("{\"path\": \"/no/such/file.csv\"}", &ds) == DDID_E_IO);
}

TEST_CASE("staggered dataset through the C API") {
  ddid_dataset* ds = nullptr;
  REQUIRE(ddid_dataset_parse_csv(kCsv, "{\"design\": \"sa\"}", &ds) == DDID_OK);
  char* out = nullptr;
  REQUIRE(ddid_dataset_info(ds, &out) == DDID_OK);
  const auto info = json::parse(take(out));
  CHECK(info["units"] == 6);
  CHECK(info["adoption_periods"] == json::array({2, 3}));

  REQUIRE(ddid_plot_data(ds, nullptr, &out) == DDID_OK);
  const auto csv = take(out);
  CHECK(csv.find("group,time,mean,n") != std::string::npos);
  CHECK(csv.find("never,1,") != std::string::npos);

  CHECK(ddid_estimate(ds, "{\"bootstrap\": 20}", &out) == DDID_E_INVALID_ARGUMENT);
  ddid_dataset_free(ds);
}

TEST_CASE("estimate and render through the C API") {
  std::string csv = "unit,time,outcome,treatment\n";
  for (int i = 0; i < 40; ++i)
    for (int t = 0; t < 3; ++t)
      csv += "u" + std::to_string(i) + "," + std::to_string(t) + "," +
             std::to_string(std::sin(i * 7.0 + t * 3.0) + t + (i < 20 && t == 2 ? 0.5 : 0.0)) + "," +
             (i < 20 && t == 2 ? "1" : "0") + "\n";
  ddid_dataset* ds = nullptr;
  REQUIRE(ddid_dataset_parse_csv(csv.c_str(), "{\"path\": \"mem.csv\"}", &ds) == DDID_OK);
  char* out = nullptr;
  const char* cfg = "{\"regime\": \"extended\", \"bootstrap\": 50, \"seed\": 9}";
  REQUIRE(ddid_estimate(ds, cfg, &out) == DDID_OK);
  const auto a = take(out);
  REQUIRE(ddid_estimate(ds, cfg, &out) == DDID_OK);
  CHECK(take(out) == a);
  const auto doc = json::parse(a);
  CHECK(doc["config"]["data"]["path"] == "mem.csv");
  CHECK(doc["seed"] == 9);

  REQUIRE(ddid_render_text(a.c_str(), &out) == DDID_OK);
  CHECK(take(out).find("double-did") != std::string::npos);

  REQUIRE(ddid_assess(ds, "{\"bootstrap\": 30}", &out) == DDID_OK);
  CHECK(json::parse(take(out))["results"].size() == 1);
  CHECK(ddid_assess(ds, "{\"bootstrap\": 1}", &out) == DDID_E_INVALID_ARGUMENT);
  ddid_dataset_free(ds);
}

TEST_CASE("simulate through the C API") {
  char* js = nullptr;
  char* csv = nullptr;
  REQUIRE(ddid_simulate("{\"n\": 40, \"reps\": 2, \"bootstrap\": 10}", &js, &csv) == DDID_OK);
  CHECK(json::parse(take(js))["results"].size() == 4);
  CHECK(take(csv).find("abs_bias") != std::string::npos);
  CHECK(ddid_simulate("{\"rho\": 1.5}", &js, nullptr) == DDID_E_INVALID_ARGUMENT);
  CHECK(std::string(ddid_last_error()).find("rho") != std::string::npos);
}

TEST_CASE("gmm and equivalence helpers") {
  const double m[] = {1.0, 0.5};
  const double w[] = {3.0, 0.0, 0.0, -1.0};
  double point = 0.0, weights[2];
  REQUIRE(ddid_gmm_combine(m, w, 2, &point, weights) == DDID_OK);
  CHECK(point == doctest::Approx(1.25));
  CHECK(weights[0] + weights[1] == doctest::Approx(1.0));
  const double zero[] = {1.0, -1.0, -1.0, 1.0};
  CHECK(ddid_gmm_combine(m, zero, 2, &point, nullptr) == DDID_E_DEGENERATE_WEIGHT);

  double b = 0.0;
  REQUIRE(ddid_equivalence_bound(-0.007, 0.096, 1.0, &b) == DDID_OK);
  CHECK(std::abs(b - 0.1655) <= 0.001);
  REQUIRE(ddid_equivalence_bound(0.0, 1.0, 0.0, &b) == DDID_OK);
  CHECK(b == doctest::Approx(1.6448536269514722));
}
