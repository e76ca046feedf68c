// supergeo: check, reduce and integrate scenarios; generate random ones.
//
// Exit codes: 0 all checks pass, 1 a check failed, 2 input error.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "supergeo/checks.hpp"
#include "supergeo/error.hpp"
#include "supergeo/scenario.hpp"

namespace {

constexpr int kExitFail = 1;
constexpr int kExitInput = 2;

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw supergeo::InputError(path, "cannot write output file");
  out << text;
}

const supergeo::InitialCondition& pick(const supergeo::Scenario& s, std::size_t k,
                                       std::vector<supergeo::InitialCondition>& fallback) {
  if (s.initial_conditions.empty()) {
    fallback = supergeo::random_initial_conditions(s.chart.n, s.chart.q, s.seed, 1);
    if (k != 0) throw supergeo::InputError("/initial_conditions", "scenario has none");
    return fallback[0];
  }
  if (k >= s.initial_conditions.size()) {
    throw supergeo::InputError("/initial_conditions/" + std::to_string(k),
                               "no such initial condition");
  }
  return s.initial_conditions[k];
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geodesics on Pi E and their reduction to the total space E"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string output;
  bool timing = false;
  bool parallel = false;
  std::size_t ic_index = 0;

  auto* check = app.add_subcommand("check", "run the scenario's check suites");
  check->add_option("scenario", scenario_path, "scenario JSON")->required();
  check->add_option("-o,--output", output, "report JSON path (default stdout)");
  check->add_flag("--timing", timing, "include wall time per check in the report");
  check->add_flag("--parallel", parallel, "run independent suites concurrently");

  auto* reduce = app.add_subcommand("reduce", "emit the reduced tables on E");
  reduce->add_option("scenario", scenario_path, "scenario JSON")->required();
  reduce->add_option("-o,--output", output, "output JSON path (default stdout)");

  auto* geodesic = app.add_subcommand("geodesic", "integrate the super geodesic");
  geodesic->add_option("scenario", scenario_path, "scenario JSON")->required();
  geodesic->add_option("-o,--output", output, "CSV path (default stdout)");
  geodesic->add_option("--ic", ic_index, "initial condition index");

  auto* correspond = app.add_subcommand("correspond", "compare both geodesic systems");
  correspond->add_option("scenario", scenario_path, "scenario JSON")->required();
  correspond->add_option("-o,--output", output, "CSV path (default stdout)");
  correspond->add_option("--ic", ic_index, "initial condition index");

  int n = 1;
  int q = 1;
  int parity = 1;
  std::uint64_t seed = 0;
  supergeo::RandomScenarioOptions random_options;
  auto* random = app.add_subcommand("random", "generate a random metric scenario");
  random->add_option("--n", n, "base dimension")->required();
  random->add_option("--q", q, "odd dimension")->required();
  random->add_option("--parity", parity, "metric parity")->required()->check(CLI::IsMember({0, 1}));
  random->add_option("--seed", seed, "generator seed")->required();
  random->add_option("--scale", random_options.scale, "perturbation size");
  random->add_option("--ics", random_options.initial_conditions, "number of initial conditions");
  random->add_option("-o,--output", output, "scenario path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (random->parsed()) {
      emit(output, supergeo::scenario_to_json(
                       supergeo::random_scenario(n, q, parity, seed, random_options)));
      return 0;
    }
    const supergeo::Scenario scenario = supergeo::load_scenario(scenario_path);
    if (check->parsed()) {
      const supergeo::Report report = supergeo::run_checks(scenario, {parallel});
      emit(output, supergeo::report_to_json(report, timing));
      if (!output.empty() && output != "-") std::cerr << supergeo::report_summary(report);
      return report.passed() ? 0 : kExitFail;
    }
    if (reduce->parsed()) {
      emit(output, supergeo::reduced_tables_json(scenario));
      return 0;
    }
    std::vector<supergeo::InitialCondition> fallback;
    const supergeo::InitialCondition& ic = pick(scenario, ic_index, fallback);
    const supergeo::SuperConnection connection = scenario.active_connection();
    std::ostringstream csv;
    int status = 0;
    if (geodesic->parsed()) {
      const supergeo::CurveSample curve =
          supergeo::integrate(supergeo::super_geodesic_rhs(connection), ic, scenario.box,
                              scenario.t_end, scenario.dt);
      supergeo::write_trajectory_csv(csv, curve);
      if (curve.truncated) {
        std::cerr << "geodesic left the chart box after t=" << curve.times.back() << "\n";
        status = kExitFail;
      }
    } else {
      const supergeo::Correspondence c =
          supergeo::correspond(connection, supergeo::reduce_connection(connection), ic,
                               scenario.box, scenario.t_end, scenario.dt);
      supergeo::write_correspondence_csv(csv, c);
      std::cerr << "max deviation " << c.max_deviation << "\n";
    }
    emit(output, csv.str());
    return status;
  } catch (const supergeo::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const supergeo::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const supergeo::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
}
