#include "supergeo/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "format.hpp"
#include "supergeo/error.hpp"
#include "supergeo/reduction.hpp"

namespace supergeo {

using nlohmann::json;

const char* status_name(CheckStatus status) {
  switch (status) {
    case CheckStatus::kPass: return "pass";
    case CheckStatus::kFail: return "fail";
    case CheckStatus::kSkip: return "skip";
  }
  return "skip";
}

bool Report::passed() const {
  return std::none_of(checks.begin(), checks.end(),
                      [](const CheckResult& c) { return c.status == CheckStatus::kFail; });
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {
      "levi-civita",  "reduction-structure", "preservation",
      "levi-civita-preservation", "correspondence", "base-projection",
      "energy",       "appendix-a",          "equivariance"};
  return names;
}

const std::map<std::string, double>& default_tolerances() {
  static const std::map<std::string, double> table = {
      {"levi-civita", 1e-9},
      {"reduction-structure", 0.0},
      {"preservation", 1e-9},
      {"levi-civita-preservation", 1e-8},
      {"correspondence", 1e-6},
      {"base-projection", 1e-8},
      {"energy", 1e-6},
      {"appendix-a", 0.0},
      {"equivariance", 1e-8},
  };
  return table;
}

namespace {

struct Context {
  const Scenario& scenario;
  SuperConnection connection;
  ReducedConnection reduced;
  std::optional<ReducedMetric> reduced_metric;
  std::vector<std::vector<double>> base_samples;
  std::vector<std::vector<double>> total_samples;
  std::vector<InitialCondition> initial_conditions;
};

CheckResult make(const std::string& name, const Scenario& s) {
  CheckResult r;
  r.name = name;
  auto it = s.tolerances.find(name);
  r.tolerance = it != s.tolerances.end() ? it->second : default_tolerances().at(name);
  return r;
}

void grade(CheckResult& r) {
  r.status = r.max_violation <= r.tolerance ? CheckStatus::kPass : CheckStatus::kFail;
}

CheckResult skip(CheckResult r, std::string why) {
  r.status = CheckStatus::kSkip;
  r.detail = std::move(why);
  return r;
}

CheckResult levi_civita_suite(const Context& c) {
  CheckResult r = make("levi-civita", c.scenario);
  if (!c.scenario.metric) return skip(r, "scenario has an explicit connection");
  const SuperMetric& g = *c.scenario.metric;
  double torsion = 0.0;
  double theta = 0.0;
  for (const auto& x : c.base_samples) {
    const MetricValues m = g.evaluate(x);
    const ChristoffelTable gamma = levi_civita_unchecked(g, x);
    torsion = std::max(torsion, max_torsion(gamma, g.chart()));
    theta = std::max(theta, max_theta(gamma, m, g.parity(), g.chart()));
    ++r.samples;
  }
  r.max_violation = std::max(torsion, theta);
  r.detail = "torsion " + detail::format_double(torsion) + ", compatibility " +
             detail::format_double(theta);
  grade(r);
  return r;
}

CheckResult structure_suite(const Context& c) {
  CheckResult r = make("reduction-structure", c.scenario);
  std::optional<ReducedMetric> rm = c.reduced_metric;
  const StructureReport s = reduction_structure_check(
      c.connection, c.reduced, c.scenario.metric ? &*c.scenario.metric : nullptr,
      rm ? &*rm : nullptr, c.base_samples);
  r.samples = s.samples;
  r.max_violation =
      static_cast<double>(s.pattern_failures + s.formula_failures + s.metric_failures);
  std::string detail = "pattern " + std::to_string(s.pattern_failures) + ", formula " +
                       std::to_string(s.formula_failures) + ", metric " +
                       std::to_string(s.metric_failures);
  for (const auto& m : s.messages) detail += "; " + m;
  r.detail = detail;
  grade(r);
  return r;
}

CheckResult preservation_suite(const Context& c) {
  CheckResult r = make("preservation", c.scenario);
  const ViolationReport t = reduced_torsion_check(c.reduced, c.total_samples);
  r.samples = t.samples;
  r.max_violation = t.max_violation;
  r.detail = "torsion " + detail::format_double(t.max_violation);
  if (c.reduced_metric) {
    const ViolationReport m =
        reduced_compat_check(c.reduced, *c.reduced_metric, c.total_samples);
    r.max_violation = std::max(r.max_violation, m.max_violation);
    r.detail += ", compatibility " + detail::format_double(m.max_violation);
  }
  grade(r);
  return r;
}

CheckResult lc_preservation_suite(const Context& c) {
  CheckResult r = make("levi-civita-preservation", c.scenario);
  if (!c.scenario.metric) return skip(r, "scenario has an explicit connection");
  if (c.scenario.metric->parity() != 1) return skip(r, "g^TE is degenerate for an even metric");
  const ViolationReport v =
      levi_civita_preservation(c.reduced, *c.reduced_metric, c.total_samples);
  r.samples = v.samples;
  r.max_violation = v.max_violation;
  grade(r);
  return r;
}

std::vector<CheckResult> trajectory_suites(const Context& c, bool want_correspondence,
                                           bool want_base, bool want_energy) {
  CheckResult corr = make("correspondence", c.scenario);
  CheckResult base = make("base-projection", c.scenario);
  CheckResult energy = make("energy", c.scenario);
  const bool energy_applies =
      c.scenario.metric && c.scenario.metric->parity() == 1 && want_energy;
  const GeodesicRhs base_rhs = base_geodesic_rhs(c.reduced);
  std::string failure;
  for (std::size_t k = 0; k < c.initial_conditions.size(); ++k) {
    const InitialCondition& ic = c.initial_conditions[k];
    Correspondence pair;
    try {
      pair = correspond(c.connection, c.reduced, ic, c.scenario.box, c.scenario.t_end,
                        c.scenario.dt);
    } catch (const Error& e) {
      failure = "initial condition " + std::to_string(k) + ": " + e.what();
      break;
    }
    corr.max_violation = std::max(corr.max_violation, pair.max_deviation);
    ++corr.samples;
    if (want_base) {
      InitialCondition base_ic{ic.x0, ic.v0, {}, {}};
      const CurveSample m =
          integrate(base_rhs, base_ic, c.scenario.box, c.scenario.t_end, c.scenario.dt);
      if (m.truncated) {
        failure = "initial condition " + std::to_string(k) + ": base geodesic left the box";
        break;
      }
      for (std::size_t t = 0; t < m.size(); ++t) {
        for (std::size_t i = 0; i < m.f[t].size(); ++i) {
          base.max_violation = std::max(
              base.max_violation, std::abs(m.f[t][i] - pair.super_curve.f[t][i]));
        }
      }
      ++base.samples;
    }
    if (energy_applies) {
      const std::vector<double> e = energy_along(*c.reduced_metric, pair.classical_curve);
      for (double v : e) energy.max_violation = std::max(energy.max_violation, std::abs(v - e[0]));
      ++energy.samples;
    }
  }
  std::vector<CheckResult> out;
  for (CheckResult* r : {&corr, &base, &energy}) {
    if (!failure.empty()) {
      r->status = CheckStatus::kFail;
      r->max_violation = std::numeric_limits<double>::infinity();
      r->detail = failure;
    } else {
      grade(*r);
    }
  }
  if (!energy_applies) energy = skip(energy, "energy is only conserved for odd metrics");
  if (want_correspondence) out.push_back(corr);
  if (want_base) out.push_back(base);
  if (want_energy) out.push_back(energy);
  return out;
}

CheckResult appendix_suite(const Context& c) {
  CheckResult r = make("appendix-a", c.scenario);
  if (!c.scenario.metric) return skip(r, "scenario has an explicit connection");
  const AppendixAReduction a = appendix_a_reduce(c.connection, *c.scenario.metric);
  const AppendixAReport rep = appendix_a_check(a, c.reduced, c.base_samples);
  r.samples = rep.samples;
  r.max_violation = std::max(rep.antisymmetry_violation, rep.bundle_connection_mismatch);
  std::ostringstream d;
  if (a.parity == 0) {
    d << "omega antisymmetry " << detail::format_double(rep.antisymmetry_violation)
      << ", omega condition " << detail::format_double(rep.worst_two_form_condition);
  } else {
    d << "B^E condition " << detail::format_double(rep.worst_iso_condition);
  }
  d << ", nabla^E mismatch " << detail::format_double(rep.bundle_connection_mismatch);
  r.detail = d.str();
  grade(r);
  if (rep.degenerate) {
    r.status = CheckStatus::kFail;
    r.detail += "; degenerate";
  }
  return r;
}

CheckResult equivariance_suite(const Context& c) {
  CheckResult r = make("equivariance", c.scenario);
  std::vector<std::vector<Expr>> frames = c.scenario.frames;
  if (frames.empty()) {
    std::vector<Expr> f;
    for (const auto& t : random_frame(c.scenario.chart.n, c.scenario.chart.q, c.scenario.seed)) {
      f.push_back(parse_expr(t, c.scenario.chart.n));
    }
    frames.push_back(std::move(f));
  }
  try {
    for (const auto& frame : frames) {
      const ViolationReport v = automorphism_equivariance(c.connection, frame, c.total_samples);
      r.max_violation = std::max(r.max_violation, v.max_violation);
      r.samples += v.samples;
    }
  } catch (const Error& e) {
    r.status = CheckStatus::kFail;
    r.max_violation = std::numeric_limits<double>::infinity();
    r.detail = e.what();
    return r;
  }
  r.detail = std::to_string(frames.size()) + " frame change(s)";
  grade(r);
  return r;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

Report run_checks(const Scenario& scenario, const RunOptions& options) {
  std::set<std::string> wanted;
  for (const auto& name : scenario.checks) {
    if (std::find(suite_names().begin(), suite_names().end(), name) == suite_names().end()) {
      throw InputError("/checks", "unknown suite '" + name + "'");
    }
    wanted.insert(name);
  }
  if (wanted.empty()) wanted.insert(suite_names().begin(), suite_names().end());
  for (const auto& [name, tol] : scenario.tolerances) {
    if (!default_tolerances().contains(name)) {
      throw InputError("/tolerances/" + name, "unknown suite");
    }
  }

  const SuperConnection connection = scenario.active_connection();
  const std::size_t count = scenario.sample_count();
  Context ctx{scenario,
              connection,
              reduce_connection(connection),
              scenario.metric ? std::optional<ReducedMetric>(reduce_metric(*scenario.metric))
                              : std::nullopt,
              halton_points(scenario.box, count),
              total_space_points(scenario.box, scenario.chart.q, count),
              scenario.initial_conditions};
  if (ctx.initial_conditions.empty()) {
    ctx.initial_conditions =
        random_initial_conditions(scenario.chart.n, scenario.chart.q, scenario.seed, 1);
  }

  using Job = std::function<std::vector<CheckResult>()>;
  std::vector<Job> jobs;
  const auto single = [&](const std::string& name, CheckResult (*fn)(const Context&)) {
    if (wanted.contains(name)) {
      jobs.push_back([fn, &ctx] { return std::vector<CheckResult>{fn(ctx)}; });
    }
  };
  single("levi-civita", levi_civita_suite);
  single("reduction-structure", structure_suite);
  single("preservation", preservation_suite);
  single("levi-civita-preservation", lc_preservation_suite);
  const bool corr = wanted.contains("correspondence");
  const bool base = wanted.contains("base-projection");
  const bool energy = wanted.contains("energy");
  if (corr || base || energy) {
    jobs.push_back([&ctx, corr, base, energy] { return trajectory_suites(ctx, corr, base, energy); });
  }
  single("appendix-a", appendix_suite);
  single("equivariance", equivariance_suite);

  const auto timed = [](const Job& job) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<CheckResult> out;
    try {
      out = job();
    } catch (const Error& e) {
      CheckResult r;
      r.name = "internal";
      r.status = CheckStatus::kFail;
      r.detail = e.what();
      out.push_back(r);
    }
    const double t = seconds_since(start) / static_cast<double>(std::max<std::size_t>(out.size(), 1));
    for (auto& r : out) r.seconds = t;
    return out;
  };

  std::vector<std::vector<CheckResult>> results(jobs.size());
  if (options.parallel) {
    std::vector<std::future<std::vector<CheckResult>>> futures;
    for (const auto& job : jobs) futures.push_back(std::async(std::launch::async, timed, job));
    for (std::size_t k = 0; k < jobs.size(); ++k) results[k] = futures[k].get();
  } else {
    for (std::size_t k = 0; k < jobs.size(); ++k) results[k] = timed(jobs[k]);
  }

  Report report;
  report.scenario = scenario.name;
  report.seed = scenario.seed;
  for (auto& group : results) {
    for (auto& r : group) report.checks.push_back(std::move(r));
  }
  return report;
}

namespace {

json number_or_string(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

}  // namespace

std::string report_to_json(const Report& report, bool timing) {
  json root = json::object();
  root["scenario"] = report.scenario;
  root["seed"] = report.seed;
  root["status"] = report.passed() ? "pass" : "fail";
  json checks = json::array();
  for (const auto& c : report.checks) {
    json item = {{"name", c.name},
                 {"status", status_name(c.status)},
                 {"max_violation", number_or_string(c.max_violation)},
                 {"tolerance", c.tolerance},
                 {"samples", c.samples}};
    if (!c.detail.empty()) item["detail"] = c.detail;
    if (timing) item["wall_time_s"] = c.seconds;
    checks.push_back(item);
  }
  root["checks"] = checks;
  return root.dump(2) + "\n";
}

std::string report_summary(const Report& report) {
  std::ostringstream out;
  for (const auto& c : report.checks) {
    out << status_name(c.status) << "  " << c.name;
    if (c.status != CheckStatus::kSkip) {
      out << "  max " << detail::format_double(c.max_violation) << " (tol "
          << detail::format_double(c.tolerance) << ", " << c.samples << " samples)";
    }
    if (!c.detail.empty()) out << "  " << c.detail;
    out << "\n";
  }
  return out.str();
}

std::string reduced_tables_json(const Scenario& scenario) {
  const ChartSpec& chart = scenario.chart;
  const int N = chart.total();
  const SuperConnection connection = scenario.active_connection();
  const ReducedConnection reduced = reduce_connection(connection);
  const auto label = [&](int k) { return CoordIndex::from_flat(k, chart).label(); };

  json root = json::object();
  root["chart"] = {{"n", chart.n}, {"q", chart.q}};
  const auto symbolic_entry = [](const FiberAffineChristoffel& c) {
    json linear = json::array();
    for (const auto& l : c.linear_part) linear.push_back(render(l));
    return json{{"constant", render(c.constant_part)}, {"linear", linear}};
  };

  if (reduced.is_symbolic()) {
    for (int r = 0; r < N; ++r) {
      for (int s = 0; s < N; ++s) {
        for (int u = 0; u < N; ++u) {
          const auto& c = reduced.symbol(s, u, r);
          if (c.is_zero()) continue;
          root["GammaTE[" + label(r) + "][" + label(s) + "][" + label(u) + "]"] =
              symbolic_entry(c);
        }
      }
    }
  } else {
    const auto points = halton_points(scenario.box, scenario.sample_count());
    std::vector<ReducedTable> tables;
    for (const auto& x : points) tables.push_back(reduced.table(x));
    root["samples"] = points;
    for (int r = 0; r < N; ++r) {
      for (int s = 0; s < N; ++s) {
        for (int u = 0; u < N; ++u) {
          bool nonzero = false;
          json constant = json::array();
          json linear = json::array();
          const bool has_linear = !tables.empty() && !tables[0](s, u, r).linear.empty();
          for (int b = 0; has_linear && b < chart.q; ++b) linear.push_back(json::array());
          for (const auto& t : tables) {
            const FiberAffineValue& v = t(s, u, r);
            nonzero = nonzero || !v.is_zero();
            constant.push_back(v.constant);
            for (std::size_t b = 0; b < v.linear.size() && has_linear; ++b) {
              linear[b].push_back(v.linear[b]);
            }
          }
          if (!nonzero) continue;
          root["GammaTE[" + label(r) + "][" + label(s) + "][" + label(u) + "]"] =
              json{{"constant", constant}, {"linear", linear}};
        }
      }
    }
  }
  if (scenario.metric) {
    const ReducedMetric gte = reduce_metric(*scenario.metric);
    root["parity_origin"] = gte.parity_origin();
    for (int s = 0; s < N; ++s) {
      for (int u = 0; u < N; ++u) {
        const auto& c = gte.coefficient(s, u);
        if (c.is_zero()) continue;
        root["gTE[" + label(s) + "][" + label(u) + "]"] = symbolic_entry(c);
      }
    }
  }
  return root.dump(2) + "\n";
}

namespace {

void write_row(std::ostream& out, const std::vector<double>& values) {
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) out << ',';
    out << detail::format_double(values[k]);
  }
  out << '\n';
}

std::vector<std::string> curve_header(const CurveSample& curve) {
  std::vector<std::string> h{"t"};
  const std::size_t n = curve.f.empty() ? 0 : curve.f[0].size();
  const std::size_t q = curve.h.empty() ? 0 : curve.h[0].size();
  for (std::size_t i = 1; i <= n; ++i) h.push_back("f_" + std::to_string(i));
  for (std::size_t a = 1; a <= q; ++a) h.push_back("h_" + std::to_string(a));
  return h;
}

void write_header(std::ostream& out, const std::vector<std::string>& names) {
  for (std::size_t k = 0; k < names.size(); ++k) out << (k ? "," : "") << names[k];
  out << '\n';
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const CurveSample& curve) {
  write_header(out, curve_header(curve));
  for (std::size_t k = 0; k < curve.size(); ++k) {
    std::vector<double> row{curve.times[k]};
    const std::vector<double> p = curve.point(k);
    row.insert(row.end(), p.begin(), p.end());
    write_row(out, row);
  }
}

void write_correspondence_csv(std::ostream& out, const Correspondence& c) {
  std::vector<std::string> names = curve_header(c.super_curve);
  const std::size_t dim = names.size() - 1;
  for (std::size_t k = 1; k <= dim; ++k) names.push_back("y_" + std::to_string(k));
  names.push_back("deviation");
  write_header(out, names);
  for (std::size_t k = 0; k < c.super_curve.size(); ++k) {
    std::vector<double> row{c.super_curve.times[k]};
    const std::vector<double> a = c.super_curve.point(k);
    const std::vector<double> b = c.classical_curve.point(k);
    row.insert(row.end(), a.begin(), a.end());
    row.insert(row.end(), b.begin(), b.end());
    row.push_back(c.deviation[k]);
    write_row(out, row);
  }
}

}  // namespace supergeo
