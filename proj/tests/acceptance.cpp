// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "supergeo/error.hpp"
#include "supergeo/geodesic.hpp"
#include "supergeo/reduction.hpp"
#include "supergeo/sampling.hpp"
#include "supergeo/scenario.hpp"
#include "supergeo/superfield.hpp"

using namespace supergeo;

namespace {

struct Config {
  int n, q, parity;
};
constexpr Config kConfigs[] = {{1, 2, 0}, {2, 2, 0}, {1, 1, 1}, {2, 2, 1}};
constexpr std::size_t kPoints = 32;

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  std::printf("[%s] %2d %-28s %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, name,
              o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double elapsed(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

double table_distance(const ChristoffelTable& a, const ChristoffelTable& b) {
  double d = 0.0;
  for (int s = 0; s < a.dim(); ++s) {
    for (int u = 0; u < a.dim(); ++u) {
      for (int r = 0; r < a.dim(); ++r) d = std::max(d, (a(s, u, r) - b(s, u, r)).max_abs());
    }
  }
  return d;
}

// Scenarios shared by criteria 2, 3, 4 and 8.
std::vector<Scenario> levi_civita_scenarios() {
  std::vector<Scenario> out;
  for (const Config c : kConfigs) {
    for (std::uint64_t k = 0; k < 50; ++k) {
      out.push_back(random_scenario(c.n, c.q, c.parity, 1000 + k));
    }
  }
  return out;
}

Outcome grassmann_kernel() {
  std::mt19937_64 rng(20261016);
  double worst = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    const int q = 1 + trial % 6;
    const int pa = static_cast<int>(rng() % 2);
    const int pb = static_cast<int>(rng() % 2);
    const GrassmannValue a = oracle::random_value(rng, q, pa);
    const GrassmannValue b = oracle::random_value(rng, q, pb);
    worst = std::max(worst, (a * b - (pa * pb ? -1.0 : 1.0) * (b * a)).max_abs());
    for (int alpha = 1; alpha <= q; ++alpha) {
      const GrassmannValue leibniz =
          left_derivative(alpha, a * b) - left_derivative(alpha, a) * b -
          (pa ? -1.0 : 1.0) * (a * left_derivative(alpha, b));
      worst = std::max(worst, leibniz.max_abs());
      worst = std::max(worst, left_derivative(alpha, left_derivative(alpha, a)).max_abs());
      const int beta = 1 + static_cast<int>(rng() % static_cast<unsigned>(q));
      worst = std::max(worst, (left_derivative(alpha, left_derivative(beta, b)) +
                               left_derivative(beta, left_derivative(alpha, b)))
                                  .max_abs());
    }
    GrassmannValue c = oracle::random_value(rng, q);
    c += GrassmannValue::scalar(q, (trial % 2 ? 1.0 : -1.0) * (0.5 + trial % 7) - body(c));
    const GrassmannValue one = GrassmannValue::scalar(q, 1.0);
    const GrassmannValue inv = invert(c);
    worst = std::max(worst, (c * inv - one).max_abs());
    worst = std::max(worst, (inv * c - one).max_abs());
  }
  return {worst <= 1e-12, "10000 cases, max residual " + fmt("%.3g", worst) + " <= 1e-12"};
}

Outcome levi_civita_self_check(const std::vector<Scenario>& scenarios, double* seconds) {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (const Scenario& s : scenarios) {
    for (const auto& x : halton_points(s.box, kPoints)) {
      const ChristoffelTable gamma = levi_civita_unchecked(*s.metric, x);
      worst = std::max(worst, max_torsion(gamma, s.chart));
      worst = std::max(worst, max_theta(gamma, s.metric->evaluate(x), s.metric->parity(), s.chart));
    }
  }
  *seconds = elapsed(start);
  const bool fast = *seconds < 30.0;
  return {worst <= 1e-9 && fast,
          std::to_string(scenarios.size()) + " scenarios x 32 points, max |Theta|,|T| " +
              fmt("%.3g", worst) + " <= 1e-9, runtime " + fmt("%.1f", *seconds) + " s < 30 s"};
}

Outcome reduction_structure(const std::vector<Scenario>& scenarios) {
  std::size_t failures_seen = 0;
  std::size_t samples = 0;
  for (const Scenario& s : scenarios) {
    const SuperConnection conn = s.active_connection();
    const ReducedConnection red = reduce_connection(conn);
    const ReducedMetric rm = reduce_metric(*s.metric);
    const StructureReport r = reduction_structure_check(conn, red, &*s.metric, &rm,
                                                        halton_points(s.box, 8));
    failures_seen += r.pattern_failures + r.formula_failures + r.metric_failures;
    samples += r.samples;
  }
  return {failures_seen == 0, std::to_string(failures_seen) + " pattern/affinity/formula failures over " +
                                  std::to_string(samples) + " samples (exact)"};
}

Outcome preservation(const std::vector<Scenario>& scenarios) {
  double torsion = 0.0;
  double compat = 0.0;
  for (const Scenario& s : scenarios) {
    const ReducedConnection red = reduce_connection(s.active_connection());
    const ReducedMetric rm = reduce_metric(*s.metric);
    const auto ys = total_space_points(s.box, s.chart.q, kPoints);
    torsion = std::max(torsion, reduced_torsion_check(red, ys).max_violation);
    compat = std::max(compat, reduced_compat_check(red, rm, ys).max_violation);
  }
  return {torsion <= 1e-9 && compat <= 1e-9,
          "reduced torsion " + fmt("%.3g", torsion) + ", compatibility " + fmt("%.3g", compat) +
              " <= 1e-9"};
}

Outcome lc_preservation() {
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 25; ++k) {
    const int n = k % 2 ? 2 : 1;
    const Scenario s = random_scenario(n, n, 1, 5000 + k);
    const ReducedConnection red = reduce_connection(s.active_connection());
    const auto ys = total_space_points(s.box, s.chart.q, kPoints);
    worst = std::max(worst,
                     levi_civita_preservation(red, reduce_metric(*s.metric), ys).max_violation);
  }
  return {worst <= 1e-8, "25 odd-metric scenarios, max difference " + fmt("%.3g", worst) +
                             " <= 1e-8"};
}

struct Pair {
  Scenario scenario;
  InitialCondition ic;
  CurveSample super_curve;
};

Outcome correspondence(std::vector<Pair>* pairs) {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::size_t errors = 0;
  std::string first_error;
  for (const Config c : kConfigs) {
    for (std::uint64_t k = 0; k < 25; ++k) {
      Scenario s = random_scenario(c.n, c.q, c.parity, 6000 + k);
      const InitialCondition ic = s.initial_conditions.at(0);
      const SuperConnection conn = s.active_connection();
      try {
        Correspondence r = correspond(conn, reduce_connection(conn), ic, s.box, 1.0, 1e-3);
        worst = std::max(worst, r.max_deviation);
        pairs->push_back({std::move(s), ic, std::move(r.super_curve)});
      } catch (const Error& e) {
        if (errors++ == 0) first_error = e.what();
      }
    }
  }
  const double seconds = elapsed(start);

  // dt-halving against a fine reference on one scenario per configuration
  double ratio_lo = 1e300;
  double ratio_hi = 0.0;
  for (const Config c : kConfigs) {
    const Scenario s = random_scenario(c.n, c.q, c.parity, 6100);
    const GeodesicRhs rhs = super_geodesic_rhs(s.active_connection());
    const InitialCondition ic = s.initial_conditions.at(0);
    const auto end_error = [&](double dt, const std::vector<double>& ref) {
      const CurveSample curve = integrate(rhs, ic, s.box, 1.0, dt);
      const std::vector<double> p = curve.point(curve.size() - 1);
      double e = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) e = std::max(e, std::abs(p[i] - ref[i]));
      return e;
    };
    const CurveSample fine = integrate(rhs, ic, s.box, 1.0, 1e-3);
    const std::vector<double> ref = fine.point(fine.size() - 1);
    const double ratio = end_error(0.1, ref) / end_error(0.05, ref);
    ratio_lo = std::min(ratio_lo, ratio);
    ratio_hi = std::max(ratio_hi, ratio);
  }

  const bool ok = errors == 0 && worst <= 1e-6 && ratio_lo >= 12.0 && ratio_hi <= 20.0 &&
                  seconds < 60.0;
  std::string detail = std::to_string(pairs->size()) + " pairs, max deviation " +
                       fmt("%.3g", worst) + " <= 1e-6, dt-halving ratio " +
                       fmt("%.2f", ratio_lo) + ".." + fmt("%.2f", ratio_hi) +
                       " in [12, 20], runtime " + fmt("%.1f", seconds) + " s < 60 s";
  if (errors) detail += "; " + std::to_string(errors) + " failed: " + first_error;
  return {ok, detail};
}

Outcome base_projection(const std::vector<Pair>& pairs) {
  double worst = 0.0;
  for (const Pair& p : pairs) {
    const ReducedConnection red = reduce_connection(p.scenario.active_connection());
    const CurveSample m = integrate(base_geodesic_rhs(red), {p.ic.x0, p.ic.v0, {}, {}},
                                    p.scenario.box, 1.0, 1e-3);
    if (m.truncated || m.size() != p.super_curve.size()) return {false, "base geodesic left the box"};
    for (std::size_t t = 0; t < m.size(); ++t) {
      for (std::size_t i = 0; i < m.f[t].size(); ++i) {
        worst = std::max(worst, std::abs(m.f[t][i] - p.super_curve.f[t][i]));
      }
    }
  }
  return {!pairs.empty() && worst <= 1e-8,
          std::to_string(pairs.size()) + " curves, max |f - base geodesic| " +
              fmt("%.3g", worst) + " <= 1e-8"};
}

Outcome appendix_a(const std::vector<Scenario>& scenarios) {
  double antisymmetry = 0.0;
  double mismatch = 0.0;
  double worst_iso = 1.0;
  std::size_t degenerate = 0;
  std::size_t odd = 0;
  for (const Scenario& s : scenarios) {
    const SuperConnection conn = s.active_connection();
    const AppendixAReduction a = appendix_a_reduce(conn, *s.metric);
    const AppendixAReport r =
        appendix_a_check(a, reduce_connection(conn), halton_points(s.box, kPoints));
    antisymmetry = std::max(antisymmetry, r.antisymmetry_violation);
    mismatch = std::max(mismatch, r.bundle_connection_mismatch);
    if (s.metric->parity() == 1) {
      ++odd;
      worst_iso = std::max(worst_iso, r.worst_iso_condition);
      if (r.degenerate) ++degenerate;
    }
  }
  return {antisymmetry == 0.0 && mismatch == 0.0 && degenerate == 0,
          "omega antisymmetry " + fmt("%.3g", antisymmetry) + " (exact), B^E singular in " +
              std::to_string(degenerate) + "/" + std::to_string(odd) +
              " odd scenarios (worst condition " + fmt("%.3g", worst_iso) +
              "), nabla^E mismatch " + fmt("%.3g", mismatch) + " (exact)"};
}

Outcome equivariance() {
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 10; ++k) {
    const Config c = kConfigs[k % 4];
    const Scenario s = random_scenario(c.n, c.q, c.parity, 9000 + k);
    std::vector<Expr> frame;
    for (const auto& t : random_frame(c.n, c.q, 9000 + k)) frame.push_back(parse_expr(t, c.n));
    const auto ys = total_space_points(s.box, s.chart.q, kPoints);
    worst = std::max(worst, automorphism_equivariance(s.active_connection(), frame, ys).max_violation);
  }
  return {worst <= 1e-8, "10 x-dependent frame changes, max deviation " + fmt("%.3g", worst) +
                             " <= 1e-8"};
}

Outcome worked_example() {
  const Scenario s = parse_scenario(R"({
    "name": "worked-example",
    "chart": {"n": 1, "q": 2, "box": {"lower": [-0.5], "upper": [0.5]}},
    "metric": {"parity": 0, "coefficients": {"x1,x1": "1", "e1,e2": "1 + x1"}}
  })");
  double vs_oracle = 0.0;
  double vs_formula = 0.0;
  for (const auto& x : halton_points(s.box, kPoints)) {
    const ChristoffelTable gamma = levi_civita_at(*s.metric, x);
    const oracle::DenseSolve ref = oracle::dense_levi_civita(*s.metric, x);
    if (ref.rank != ref.unknowns) return {false, "dense oracle system is rank deficient"};
    vs_oracle = std::max(vs_oracle, table_distance(gamma, ref.gamma));
    const double expected = 1.0 / (2.0 * (1.0 + x[0]));
    vs_formula = std::max(vs_formula, std::abs(body(ref.gamma(0, 1, 1)) - expected));
    vs_formula = std::max(vs_formula, (gamma(0, 1, 1) - GrassmannValue::scalar(2, expected)).max_abs());
  }
  return {vs_oracle <= 1e-10 && vs_formula <= 1e-10,
          "32 points, solver vs dense oracle " + fmt("%.3g", vs_oracle) +
              ", Gamma^{e1}_{x1 e1} vs 1/(2(1+x1)) " + fmt("%.3g", vs_formula) + " <= 1e-10"};
}

}  // namespace

int main() {
  const std::vector<Scenario> lc = levi_civita_scenarios();
  std::vector<Pair> pairs;
  double lc_seconds = 0.0;
  report(1, "grassmann-kernel", grassmann_kernel);
  report(2, "levi-civita-self-check", [&] { return levi_civita_self_check(lc, &lc_seconds); });
  report(3, "reduction-structure", [&] { return reduction_structure(lc); });
  report(4, "torsion-compat-preserved", [&] { return preservation(lc); });
  report(5, "levi-civita-preserved", lc_preservation);
  report(6, "geodesic-correspondence", [&] { return correspondence(&pairs); });
  report(7, "base-projection", [&] { return base_projection(pairs); });
  report(8, "bundle-data", [&] { return appendix_a(lc); });
  report(9, "frame-equivariance", equivariance);
  report(10, "worked-example", worked_example);
  std::printf("%s: %d of 10 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
