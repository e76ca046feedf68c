#pragma once

// Scenario files: a chart with its box, either a metric or an explicit
// connection, initial conditions and the check suites to run.
//
// Coefficients are keyed by comma-separated coordinate labels: "x1,e2" is
// g_{x1 e2}; "x1,x2,e1" is Gamma^{e1}_{x1 x2}.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "supergeo/geodesic.hpp"
#include "supergeo/sampling.hpp"
#include "supergeo/superfield.hpp"
#include "supergeo/supergeometry.hpp"

namespace supergeo {

struct Scenario {
  std::string name;
  ChartSpec chart;
  ChartBox box;

  // exactly one of metric / connection
  std::optional<int> metric_parity;
  std::vector<std::pair<std::string, std::string>> metric_texts;
  std::vector<std::pair<std::string, std::string>> connection_texts;
  std::optional<SuperMetric> metric;
  std::optional<SuperConnection> connection;

  std::vector<InitialCondition> initial_conditions;
  double dt = 1e-3;
  double t_end = 1.0;
  std::vector<std::string> checks;  // empty means every suite
  std::uint64_t seed = 0;
  std::optional<std::size_t> samples;
  std::map<std::string, double> tolerances;  // overrides per suite
  // q x q frame changes for the equivariance suite, row-major texts
  std::vector<std::vector<std::string>> frame_texts;
  std::vector<std::vector<Expr>> frames;

  /// Connection under test: the explicit one or the Levi-Civita connection
  /// of the metric (solved on demand).
  SuperConnection active_connection() const;
  std::size_t sample_count() const;
};

/// Throws InputError with a JSON-pointer location for schema and parse errors.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);
/// Pretty-printed JSON accepted by parse_scenario.
std::string scenario_to_json(const Scenario& scenario);

struct RandomScenarioOptions {
  double scale = 0.1;  // size of the perturbation; 0 gives a flat scenario
  std::size_t initial_conditions = 1;
  std::size_t frames = 1;
};

/// Constant block plus small polynomial perturbations, non-degenerate on the
/// box [-1, 1]^n by diagonal dominance. Deterministic in `seed`.
/// Throws DomainError for incompatible (n, q, parity).
Scenario random_scenario(int n, int q, int parity, std::uint64_t seed,
                         const RandomScenarioOptions& options = {});

/// Random initial conditions with base point near the origin.
std::vector<InitialCondition> random_initial_conditions(int n, int q, std::uint64_t seed,
                                                        std::size_t count);

/// Random x-dependent q x q frame change, invertible on [-1, 1]^n.
std::vector<std::string> random_frame(int n, int q, std::uint64_t seed);

}  // namespace supergeo
