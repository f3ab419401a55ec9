#include "doctest.h"

#include "ddid/error.hpp"
#include "ddid/panel_data.hpp"
#include "support.hpp"

using namespace ddid;
using namespace ddid::testing;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::internal;
}

std::string message_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("load: minimal 2x2 panel") {
  const auto d = parse_csv("unit,time,outcome,treatment\nA,1,1.0,0\nA,2,2.0,1\nB,1,0.5,0\nB,2,0.7,0\n", {},
                           DataMode::panel, Design::basic);
  CHECK(d.size() == 4);
  CHECK(d.period_labels() == std::vector<std::int64_t>{1, 2});
  CHECK(d.onset() == 1);
  CHECK(d.balanced());
  CHECK(d.cluster_label(d.cluster_of(0)) == "A");
}

TEST_CASE("load: duplicate key in panel mode") {
  auto f = [] {
    parse_csv("unit,time,outcome,treatment\nA,1,1,0\nA,1,2,0\nB,1,0,0\nB,2,0,1\n", {}, DataMode::panel,
              Design::basic);
  };
  CHECK(code_of(f) == ErrorCode::validation);
  CHECK(message_of(f).find("duplicate") != std::string::npos);
}

TEST_CASE("load: treatment reversal in staggered mode names the unit") {
  auto f = [] {
    parse_csv("unit,time,outcome,treatment\nZ,1,0,0\nZ,2,0,0\nZ,3,0,1\nZ,4,0,0\n", {}, DataMode::panel,
              Design::staggered);
  };
  CHECK(code_of(f) == ErrorCode::validation);
  CHECK(message_of(f).find("'Z'") != std::string::npos);
}

TEST_CASE("load: schema and value errors") {
  CHECK(code_of([] { parse_csv("unit,time,y,treatment\nA,1,1,0\n", {}, DataMode::panel, Design::basic); }) ==
        ErrorCode::schema);
  CHECK(message_of([] { parse_csv("unit,time,y,treatment\nA,1,1,0\n", {}, DataMode::panel, Design::basic); })
            .find("outcome") != std::string::npos);
  const auto bad = [] {
    parse_csv("unit,time,outcome,treatment\nA,1,1,0\nA,2,abc,1\n", {}, DataMode::panel, Design::basic);
  };
  CHECK(code_of(bad) == ErrorCode::validation);
  CHECK(message_of(bad).find("line 3") != std::string::npos);
  CHECK(code_of([] {
          parse_csv("unit,time,outcome,treatment\nA,1,1,0\nB,2,1,1\n", {}, DataMode::repeated_cross_section,
                    Design::basic);
        }) == ErrorCode::schema);
  CHECK(code_of([] {
          parse_csv("unit,time,outcome,treatment\nA,1,1,0\nB,2,1,1\n", {}, DataMode::repeated_cross_section,
                    Design::staggered);
        }) != ErrorCode::internal);
}

TEST_CASE("load: treatment accepts true/false and quoted fields") {
  const auto d = parse_csv("\"unit\",time,outcome,treatment\n\"a,b\",1,1,false\n\"a,b\",2,2,true\nc,1,0,0\nc,2,0,0\n",
                           {}, DataMode::panel, Design::basic);
  CHECK(d.unit_label(0) == "a,b");
  CHECK(d.treated(1));
}

TEST_CASE("basic design with heterogeneous onsets points to the staggered design") {
  auto f = [] {
    parse_csv("unit,time,outcome,treatment\nA,1,0,0\nA,2,0,1\nA,3,0,1\nB,1,0,0\nB,2,0,0\nB,3,0,1\nC,1,0,0\nC,2,0,0\nC,3,0,0\n",
              {}, DataMode::panel, Design::basic);
  };
  CHECK(code_of(f) == ErrorCode::validation);
  CHECK(message_of(f).find("staggered") != std::string::npos);
}

TEST_CASE("cell_mean examples") {
  const auto d = parse_csv("unit,time,outcome,treatment\nA,1,0,0\nA,2,2,1\nB,1,0,0\nB,2,4,1\nC,1,7.5,0\nC,2,1,0\n",
                           {}, DataMode::panel, Design::basic);
  const auto m = cell_mean(d, 1, 1);
  CHECK(m.mean == 3.0);
  CHECK(m.n == 2.0);
  const auto s = cell_mean(d, 0, 0);
  CHECK(s.mean == 7.5);
  CHECK(s.n == 1.0);
  const auto rcs = parse_csv("unit,time,outcome,treatment,g\nA,1,0,0,1\nB,2,2,1,1\nC,2,1,0,0\n", Schema{.group = "g"},
                             DataMode::repeated_cross_section, Design::basic);
  CHECK_THROWS_AS(cell_mean(rcs, 0, 0), EmptyCellError);
  try {
    cell_mean(rcs, 0, 0);
  } catch (const EmptyCellError& e) {
    CHECK(e.group() == "control");
    CHECK(e.period() == 0);
  }
}

TEST_CASE("assign_groups: staggered cases") {
  const auto d = parse_csv("unit,time,outcome,treatment\n"
                           "A,1,0,0\nA,2,0,0\nA,3,0,1\nA,4,0,1\n"
                           "N,1,0,0\nN,2,0,0\nN,3,0,0\nN,4,0,0\n",
                           {}, DataMode::panel, Design::staggered);
  const auto g = assign_groups(d);
  const int a = 0, never = 1;
  REQUIRE(g.adoption[a].has_value());
  CHECK(d.period_label(*g.adoption[a]) == 3);
  const int t2 = *d.period_index(2), t3 = *d.period_index(3), t4 = *d.period_index(4);
  CHECK(g.g_it(a, t3) == 1);
  CHECK(g.g_it(a, t4) == -1);
  CHECK(g.g_it(a, t2) == 0);
  CHECK_FALSE(g.adoption[never].has_value());
  for (int t = 0; t < d.n_periods(); ++t) CHECK(g.g_it(never, t) == 0);
  // A_i = 3, s = 2 at t = 2: not later than t + s = 4, so excluded.
  CHECK(g.g_its(a, t2, 2) == -1);
}

TEST_CASE("property: G_its with s = 0 equals G_it and adoption is well defined") {
  Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<int> adoption;
    for (int i = 0; i < 30; ++i) adoption.push_back(uniform_int(rng, -1, 5));
    const auto d = staggered_panel(rng, adoption, 6, [](int, int t) { return t; });
    const auto g = assign_groups(d);
    for (int u = 0; u < d.n_units(); ++u) {
      for (int t = 0; t < d.n_periods(); ++t) {
        CHECK(g.g_its(u, t, 0) == g.g_it(u, t));
        for (int s = 0; s < 3; ++s)
          if (g.g_its(u, t, s) == 0) CHECK((!g.adoption[u] || *g.adoption[u] > t + s));
      }
      const auto& rows = d.rows_by_unit()[u];
      const bool never = !g.adoption[u];
      bool onset_ok = false;
      if (!never) {
        onset_ok = true;
        for (auto r : rows) {
          if (d.period_of(r) < *g.adoption[u]) onset_ok = onset_ok && !d.treated(r);
          if (d.period_of(r) == *g.adoption[u]) onset_ok = onset_ok && d.treated(r);
        }
      }
      CHECK(never != onset_ok);
    }
  }
}

TEST_CASE("property: CSV round trip reproduces observations") {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const auto d = make_panel(
        rng, 12, 4, 2, [](int g, int t) { return g * 0.3 + t; }, 1.0, 0.2, 2);
    Schema schema;
    schema.covariates = {"x0", "x1"};
    schema.cluster = "cl";
    const auto text = to_csv(d, schema);
    const auto back = parse_csv(text, schema, DataMode::panel, Design::basic);
    REQUIRE(back.size() == d.size());
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(back.observation(i) == d.observation(i));
  }
}

TEST_CASE("unbalanced panels are flagged") {
  Rng rng(3);
  const auto d = random_panel(rng, 30, 4, 2, 0.3);
  CHECK_FALSE(d.balanced());
  CHECK_FALSE(d.notes().empty());
}
