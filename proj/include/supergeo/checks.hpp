#pragma once

// Check suites over a scenario and the report / trajectory emitters.

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "supergeo/geodesic.hpp"
#include "supergeo/scenario.hpp"

namespace supergeo {

enum class CheckStatus { kPass, kFail, kSkip };

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::kSkip;
  double max_violation = 0.0;
  double tolerance = 0.0;
  std::size_t samples = 0;
  std::string detail;
  double seconds = 0.0;
};

struct Report {
  std::string scenario;
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;

  bool passed() const;
};

/// Suite names in execution order.
const std::vector<std::string>& suite_names();
/// Default tolerance of every suite.
const std::map<std::string, double>& default_tolerances();

struct RunOptions {
  bool parallel = false;  // run independent suites on separate threads
};

/// Runs the scenario's suites (all when its list is empty). Failures are
/// collected, not short-circuited. Throws InputError for unknown suite names.
Report run_checks(const Scenario& scenario, const RunOptions& options = {});

/// JSON report; wall time is included only when `timing` is set so that
/// reports are byte-stable.
std::string report_to_json(const Report& report, bool timing);
/// One line per check.
std::string report_summary(const Report& report);

/// Reduced tables as JSON: "GammaTE[r][s][u]" and "gTE[s][u]" entries.
std::string reduced_tables_json(const Scenario& scenario);

/// CSV with t, f_1..f_n, h_1..h_q.
void write_trajectory_csv(std::ostream& out, const CurveSample& curve);
/// CSV with t, f, h, y_1..y_{n+q}, deviation.
void write_correspondence_csv(std::ostream& out, const Correspondence& c);

const char* status_name(CheckStatus status);

}  // namespace supergeo
