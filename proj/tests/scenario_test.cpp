#include <doctest.h>

#include <json.hpp>
#include <sstream>

#include "supergeo/checks.hpp"
#include "supergeo/error.hpp"
#include "supergeo/scenario.hpp"

using namespace supergeo;

namespace {

std::string location_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const InputError& e) {
    return e.location() + " | " + e.what();
  }
  return "accepted";
}

}  // namespace

TEST_CASE("odd metric on a chart with n != q is rejected") {
  const std::string where = location_of(R"({
    "chart": {"n": 2, "q": 1},
    "metric": {"parity": 1, "coefficients": {"x1,e1": "1"}}
  })");
  CHECK(where.starts_with("/metric/parity"));
  CHECK(where.find("odd metric requires n=q") != std::string::npos);
}

TEST_CASE("schema errors point at the offending field") {
  CHECK(location_of(R"({"chart": {"n": 1, "q": 2}})").starts_with("/ |"));
  CHECK(location_of(R"({"metric": {}})").starts_with("/chart"));
  CHECK(location_of(R"({"chart": {"n": 1, "q": 2}, "metric": {"coefficients": {}}})")
            .starts_with("/metric/parity"));
  CHECK(location_of(R"({"chart": {"n": 1, "q": 2},
                        "metric": {"parity": 0, "coefficients": {"x1,x1": "1 +", "e1,e2": "1"}}})")
            .starts_with("/metric/coefficients/x1,x1"));
  CHECK(location_of(R"({"chart": {"n": 1, "q": 2},
                        "metric": {"parity": 0, "coefficients": {"x1,e3": "e[1]"}}})")
            .starts_with("/metric/coefficients/x1,e3"));
  CHECK(location_of(R"({"chart": {"n": 1, "q": 2},
                        "metric": {"parity": 0, "coefficients": {"x1,x1": "1", "e1,e2": "1"}},
                        "connection": {"christoffel": {}}})")
            .starts_with("/ |"));
  CHECK(location_of(R"({"chart": {"n": 1, "q": 2},
                        "metric": {"parity": 0, "coefficients": {"x1,x1": "1", "e1,e2": "1"}},
                        "integration": {"dt": 0}})")
            .starts_with("/integration/dt"));
  CHECK(location_of(R"({"chart": {"n": 1, "q": 2},
                        "metric": {"parity": 0, "coefficients": {"x1,x1": "1", "e1,e2": "1"}},
                        "initial_conditions": [{"x0": [3], "v0": [0], "e0": [0, 0], "w0": [0, 0]}]})")
            .starts_with("/initial_conditions/0/x0"));
  CHECK(location_of("{not json").starts_with("/ |"));
}

TEST_CASE("metric validation on load") {
  // g_{e1 e2} = g_{e2 e1} breaks supersymmetry
  CHECK(location_of(R"({"chart": {"n": 1, "q": 2},
                        "metric": {"parity": 0, "coefficients": {"x1,x1": "1", "e1,e2": "1", "e2,e1": "1"}}})")
            .find("not supersymmetric") != std::string::npos);
  CHECK(location_of(R"({"chart": {"n": 1, "q": 2},
                        "metric": {"parity": 0, "coefficients": {"x1,x1": "x1", "e1,e2": "1"}}})")
            .find("degenerate") != std::string::npos);
}

TEST_CASE("explicit connection scenarios") {
  const Scenario s = parse_scenario(R"({
    "chart": {"n": 1, "q": 1},
    "connection": {"christoffel": {"x1,x1,x1": "x1", "x1,e1,e1": "2", "e1,x1,e1": "2"}},
    "checks": ["levi-civita", "preservation", "correspondence"]
  })");
  CHECK_FALSE(s.metric.has_value());
  const Report r = run_checks(s);
  REQUIRE(r.checks.size() == 3);
  CHECK(r.checks[0].status == CheckStatus::kSkip);
  CHECK(r.checks[1].status == CheckStatus::kPass);
  CHECK(r.checks[2].status == CheckStatus::kPass);
  CHECK(location_of(R"({"chart": {"n": 1, "q": 1},
                        "connection": {"christoffel": {"x1,x1,e1": "1"}}})")
            .starts_with("/connection/christoffel"));
}

TEST_CASE("random scenarios are deterministic") {
  const Scenario a = random_scenario(2, 2, 1, 77);
  const Scenario b = random_scenario(2, 2, 1, 77);
  const Scenario c = random_scenario(2, 2, 1, 78);
  CHECK(scenario_to_json(a) == scenario_to_json(b));
  CHECK(scenario_to_json(a) != scenario_to_json(c));
  CHECK(scenario_to_json(parse_scenario(scenario_to_json(a))) == scenario_to_json(a));
  CHECK(random_frame(2, 2, 5) == random_frame(2, 2, 5));
}

TEST_CASE("random scenario arguments") {
  CHECK_THROWS_AS(random_scenario(2, 1, 1, 0), DomainError);
  CHECK_THROWS_AS(random_scenario(1, 1, 0, 0), DomainError);
  RandomScenarioOptions big;
  big.scale = 0.5;
  CHECK_THROWS_AS(random_scenario(2, 2, 0, 0, big), DomainError);
}

TEST_CASE("scale zero gives a flat scenario") {
  RandomScenarioOptions flat;
  flat.scale = 0.0;
  for (int parity : {0, 1}) {
    const Scenario s = random_scenario(2, 2, parity, 3, flat);
    const ChristoffelTable gamma = s.active_connection().at(std::vector<double>{0.3, -0.2});
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        for (int r = 0; r < 4; ++r) CHECK(gamma(a, b, r).is_zero());
      }
    }
  }
}

TEST_CASE("check runner") {
  Scenario s = random_scenario(1, 1, 1, 10);
  const Report r = run_checks(s);
  CHECK(r.passed());
  CHECK(r.checks.size() == suite_names().size());
  const std::string json = report_to_json(r, false);
  CHECK(json.find("wall_time_s") == std::string::npos);
  CHECK(report_to_json(run_checks(s, {true}), false) == json);
  CHECK(report_to_json(r, true).find("wall_time_s") != std::string::npos);

  s.checks = {"correspondence", "no-such-suite"};
  CHECK_THROWS_AS(run_checks(s), InputError);
  s.checks = {};
  s.tolerances["no-such-suite"] = 1.0;
  CHECK_THROWS_AS(run_checks(s), InputError);
}

TEST_CASE("a zero tolerance on a rounding-limited suite fails without stopping the run") {
  Scenario s = random_scenario(2, 2, 1, 10);
  s.checks = {"levi-civita", "energy", "appendix-a"};
  s.tolerances["energy"] = 0.0;
  const Report r = run_checks(s);
  REQUIRE(r.checks.size() == 3);
  CHECK(r.checks[1].status == CheckStatus::kFail);
  CHECK(r.checks[2].status == CheckStatus::kPass);
  CHECK_FALSE(r.passed());
}

TEST_CASE("reduced table output") {
  const Scenario s = random_scenario(1, 1, 1, 4);
  const auto doc = nlohmann::json::parse(reduced_tables_json(s));
  CHECK(doc.dump().find("GammaTE[") != std::string::npos);
  CHECK(doc.dump().find("gTE[") != std::string::npos);
}

TEST_CASE("trajectory CSV layout") {
  const Scenario s = random_scenario(1, 1, 1, 4);
  const SuperConnection conn = s.active_connection();
  const InitialCondition ic = random_initial_conditions(1, 1, 4, 1)[0];
  const CurveSample c = integrate(super_geodesic_rhs(conn), ic, s.box, 0.01, 1e-3);
  std::ostringstream out;
  write_trajectory_csv(out, c);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,f_1,h_1");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == c.size());
}
