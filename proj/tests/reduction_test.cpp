#include <doctest.h>

#include <cmath>

#include "oracle.hpp"
#include "supergeo/error.hpp"
#include "supergeo/reduction.hpp"
#include "supergeo/sampling.hpp"
#include "supergeo/scenario.hpp"

using namespace supergeo;

namespace {

struct Config {
  int n, q, parity;
};
const Config kConfigs[] = {{1, 2, 0}, {2, 2, 0}, {1, 1, 1}, {2, 2, 1}};

enum Block { kB = 0, kO = 1 };

// Blocks (s, u, r) where Gamma^TE may be nonzero and whether it may depend
// on the fiber.
bool allowed(int s, int u, int r, bool* affine) {
  *affine = false;
  if (s == kB && u == kB && r == kB) return true;
  if (s == kB && u == kB && r == kO) return *affine = true;
  if (s == kB && u == kO && r == kO) return true;
  if (s == kO && u == kB && r == kO) return true;
  return false;
}

}  // namespace

TEST_CASE("vanishing pattern and fiber-affinity of the reduced connection") {
  for (const Config c : kConfigs) {
    const Scenario s = random_scenario(c.n, c.q, c.parity, 3);
    const SuperConnection conn = s.active_connection();
    const ReducedConnection red = reduce_connection(conn);
    const int N = s.chart.total();
    for (const auto& x : halton_points(s.box, 6)) {
      const ReducedTable t = red.table(x);
      for (int a = 0; a < N; ++a) {
        for (int b = 0; b < N; ++b) {
          for (int r = 0; r < N; ++r) {
            bool affine = false;
            const bool ok = allowed(coord_parity(a, s.chart), coord_parity(b, s.chart),
                                    coord_parity(r, s.chart), &affine);
            if (!ok) CHECK(t(a, b, r).is_zero());
            if (!affine) CHECK(t(a, b, r).linear.empty());
          }
        }
      }
    }
    const StructureReport rep = reduction_structure_check(conn, red, &*s.metric, nullptr,
                                                          halton_points(s.box, 6));
    CHECK(rep.ok());
  }
}

TEST_CASE("fiber-linear entries are read off the degree-one part") {
  const Scenario s = random_scenario(2, 2, 0, 8);
  const SuperConnection conn = s.active_connection();
  const ReducedConnection red = reduce_connection(conn);
  const std::vector<double> x = {0.3, -0.1};
  const ChristoffelTable gamma = conn.at(x);
  const ReducedTable t = red.table(x);
  // Gamma^{e_c}_{x_i x_j} = sum_b (d/de_b Gamma) e_b
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      for (int c = 2; c < 4; ++c) {
        const FiberAffineValue& v = t(i, j, c);
        CHECK(v.constant == 0.0);
        for (int b = 1; b <= 2; ++b) {
          const double expected = gamma(i, j, c).coefficient(MultiIndex::single(b));
          const double got = v.linear.empty() ? 0.0 : v.linear[static_cast<std::size_t>(b - 1)];
          CHECK(got == expected);
        }
      }
    }
  }
}

TEST_CASE("reduced metric of an odd metric") {
  const Scenario s = random_scenario(2, 2, 1, 5);
  const ReducedMetric g = reduce_metric(*s.metric);
  const std::vector<double> y0 = {0.1, 0.2, 0.0, 0.0};
  const std::vector<double> y1 = {0.1, 0.2, 0.5, -0.25};
  const std::vector<double> v0 = g.at(y0);
  const std::vector<double> v1 = g.at(y1);
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const double ab = v1[a * 4 + b];
      CHECK(ab == doctest::Approx(v1[b * 4 + a]).epsilon(1e-15));
      if (a >= 2 && b >= 2) CHECK(ab == 0.0);
      if (a < 2 && b < 2) CHECK(v0[a * 4 + b] == 0.0);  // linear in e, no body
      if ((a < 2) != (b < 2)) CHECK(ab == v0[a * 4 + b]);
    }
  }
  const std::vector<double> x = {0.1, 0.2};
  const GrassmannMatrix body_values = s.metric->values(x);
  CHECK(v0[0 * 4 + 2] == -body(body_values(0, 2)));
}

TEST_CASE("classical Levi-Civita matches finite differences") {
  for (std::uint64_t seed : {1, 2}) {
    for (int n : {1, 2}) {
      const Scenario s = random_scenario(n, n, 1, seed);
      const ReducedMetric g = reduce_metric(*s.metric);
      for (const auto& y : total_space_points(s.box, s.chart.q, 4)) {
        const std::vector<double> a = classical_levi_civita(g, y);
        const std::vector<double> b = oracle::finite_difference_levi_civita(g, y);
        for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-7));
      }
    }
  }
  const Scenario even = random_scenario(1, 2, 0, 1);
  const std::vector<double> y = {0.0, 0.0, 0.0};
  CHECK_THROWS_AS(classical_levi_civita(reduce_metric(*even.metric), y), DomainError);
}

TEST_CASE("torsion, compatibility and Levi-Civita are preserved") {
  for (const Config c : kConfigs) {
    const Scenario s = random_scenario(c.n, c.q, c.parity, 12);
    const SuperConnection conn = s.active_connection();
    const ReducedConnection red = reduce_connection(conn);
    const ReducedMetric g = reduce_metric(*s.metric);
    const auto ys = total_space_points(s.box, s.chart.q, 8);
    CHECK(reduced_torsion_check(red, ys).max_violation < 1e-12);
    CHECK(reduced_compat_check(red, g, ys).max_violation < 1e-12);
    if (c.parity == 1) CHECK(levi_civita_preservation(red, g, ys).max_violation < 1e-10);
  }
}

TEST_CASE("corrupted reductions are caught") {
  const Scenario s = random_scenario(2, 2, 1, 6);
  const SuperConnection conn = s.active_connection();
  const ReducedConnection red = reduce_connection(conn);
  const ReducedMetric g = reduce_metric(*s.metric);
  const auto ys = total_space_points(s.box, s.chart.q, 8);
  const auto xs = halton_points(s.box, 4);

  // asymmetric perturbation of Gamma^{x1}_{x1 x2}
  FiberAffineChristoffel bump{parse_expr("0.01", 2), {}};
  const ReducedConnection bad = red.with_symbol(0, 1, 0, bump);
  CHECK(reduced_torsion_check(bad, ys).max_violation > 1e-3);
  CHECK(reduced_compat_check(bad, g, ys).max_violation > 1e-3);
  CHECK(levi_civita_preservation(bad, g, ys).max_violation > 1e-3);
  CHECK_FALSE(reduction_structure_check(conn, bad, nullptr, nullptr, xs).ok());

  // a fiber dependence where the pattern forbids one
  FiberAffineChristoffel leak{parse_expr("0", 2), {parse_expr("1", 2), parse_expr("0", 2)}};
  const ReducedConnection leaky = red.with_symbol(0, 1, 1, leak);
  CHECK(reduction_structure_check(conn, leaky, nullptr, nullptr, xs).pattern_failures > 0);
}

TEST_CASE("zero-section pullback is the body of the base block") {
  const Scenario s = random_scenario(2, 2, 0, 2);
  const SuperConnection conn = s.active_connection();
  const ReducedConnection red = reduce_connection(conn);
  const std::vector<double> x = {-0.2, 0.4};
  const std::vector<double> tm = zero_section_pullback(red, x);
  const ChristoffelTable gamma = conn.at(x);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      for (int k = 0; k < 2; ++k) CHECK(tm[(i * 2 + j) * 2 + k] == body(gamma(i, j, k)));
    }
  }
}

TEST_CASE("bundle data read off the super metric") {
  for (const Config c : kConfigs) {
    const Scenario s = random_scenario(c.n, c.q, c.parity, 9);
    const SuperConnection conn = s.active_connection();
    const AppendixAReduction a = appendix_a_reduce(conn, *s.metric);
    const AppendixAReport rep = appendix_a_check(a, reduce_connection(conn), halton_points(s.box, 8));
    CHECK(rep.antisymmetry_violation == 0.0);
    CHECK(rep.bundle_connection_mismatch == 0.0);
    CHECK_FALSE(rep.degenerate);
    if (c.parity == 0) {
      CHECK(a.base_metric.size() == static_cast<std::size_t>(c.n * c.n));
      CHECK(a.two_form.size() == static_cast<std::size_t>(c.q * c.q));
    } else {
      CHECK(a.bundle_iso.size() == static_cast<std::size_t>(c.q * c.n));
      CHECK(rep.worst_iso_condition < 1e3);
    }
  }
}

TEST_CASE("frame changes commute with the reduction") {
  for (const Config c : kConfigs) {
    const Scenario s = random_scenario(c.n, c.q, c.parity, 14);
    const SuperConnection conn = s.active_connection();
    const auto ys = total_space_points(s.box, s.chart.q, 6);
    std::vector<Expr> identity;
    for (int a = 0; a < c.q; ++a) {
      for (int b = 0; b < c.q; ++b) identity.push_back(constant(a == b ? 1.0 : 0.0));
    }
    CHECK(automorphism_equivariance(conn, identity, ys).max_violation == 0.0);
    std::vector<Expr> frame;
    for (const auto& t : random_frame(c.n, c.q, 14)) frame.push_back(parse_expr(t, c.n));
    CHECK(automorphism_equivariance(conn, frame, ys).max_violation < 1e-10);

    const std::vector<double> x(static_cast<std::size_t>(c.n), 0.1);
    const ChristoffelTable same = transform_connection(conn, identity, x);
    const ChristoffelTable orig = conn.at(x);
    for (int a = 0; a < s.chart.total(); ++a) {
      for (int b = 0; b < s.chart.total(); ++b) {
        for (int r = 0; r < s.chart.total(); ++r) CHECK((same(a, b, r) - orig(a, b, r)).max_abs() < 1e-15);
      }
    }
  }
  const Scenario s = random_scenario(1, 1, 1, 1);
  const std::vector<Expr> singular = {parse_expr("x1", 1)};
  const std::vector<std::vector<double>> ys = {{0.0, 0.5}};
  CHECK_THROWS_AS(automorphism_equivariance(s.active_connection(), singular, ys),
                  NotInvertibleError);
}

TEST_CASE("frame changes leave the base-base-base body alone") {
  const Scenario s = random_scenario(1, 2, 0, 4);
  const SuperConnection conn = s.active_connection();
  const std::vector<Expr> frame = {constant(2.0), constant(1.0), parse_expr("x1", 1),
                                   constant(1.0)};
  const std::vector<double> x = {0.25};
  CHECK(body(transform_connection(conn, frame, x)(0, 0, 0)) ==
        doctest::Approx(body(conn.at(x)(0, 0, 0))).epsilon(1e-14));
}
