#include <doctest.h>

#include <random>

#include "supergeo/error.hpp"
#include "supergeo/superfield.hpp"

using namespace supergeo;

namespace {

const ChartSpec kChart{2, 3, "test"};

SuperFunction parse(const char* text) { return parse_superfunction(text, kChart); }

bool same_values(const SuperFunction& a, const SuperFunction& b) {
  for (const auto& x : {std::vector<double>{0.1, -0.4}, std::vector<double>{0.7, 0.2}}) {
    if ((eval(a, x) - eval(b, x)).max_abs() > 1e-12) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("chart validation") {
  CHECK_THROWS_AS((ChartSpec{0, 1}.validate()), DomainError);
  CHECK_THROWS_AS((ChartSpec{1, 0}.validate()), DomainError);
  CHECK_THROWS_AS((ChartSpec{1, 17}.validate()), DomainError);
  CHECK_NOTHROW((ChartSpec{1, 16}.validate()));
}

TEST_CASE("parsing collects components") {
  const SuperFunction f = parse("x1 + (2*x2)*e[1] - e[1]*e[2] + 3*e[2,3]");
  CHECK(f.components().size() == 4);
  CHECK(f.parity() == Parity::kMixed);
  CHECK(f.max_degree() == 2);
  CHECK(f.component(MultiIndex::from_labels({1, 2})).is_constant(-1.0));
  CHECK(f.component(MultiIndex::from_labels({1, 3})).is_zero());
  const SuperFunction g = parse("e[2]*e[1]");
  CHECK(g.component(MultiIndex::from_labels({1, 2})).is_constant(-1.0));
  CHECK_THROWS_AS(parse("e[4]"), ParseError);
  CHECK_THROWS_AS(parse("x3"), ParseError);
  CHECK_THROWS_AS(parse("1/e[1]"), ParseError);
}

TEST_CASE("graded product and its evaluation commute") {
  const SuperFunction f = parse("x1 + x2*e[1] + e[2,3]");
  const SuperFunction g = parse("2 - x1*e[2] + x2*e[1,3]");
  const SuperFunction fg = f * g;
  const std::vector<double> x = {0.3, -0.6};
  CHECK(((eval(f, x) * eval(g, x)) - eval(fg, x)).max_abs() < 1e-14);
}

TEST_CASE("odd derivatives are nilpotent and satisfy Leibniz") {
  const SuperFunction f = parse("x1*e[1] + x2^2*e[2] + e[1,2,3]");  // odd
  const SuperFunction g = parse("1 + x1*e[1,2] - x2*e[2,3]");       // even
  for (int a = 1; a <= kChart.q; ++a) {
    CHECK(dhat_odd(dhat_odd(f, a), a).is_zero());
    CHECK(dhat_odd(dhat_odd(g, a), a).is_zero());
    CHECK(same_values(dhat_odd(f * g, a), dhat_odd(f, a) * g - f * dhat_odd(g, a)));
    CHECK(same_values(dhat_odd(g * f, a), dhat_odd(g, a) * f + g * dhat_odd(f, a)));
    for (int b = 1; b <= kChart.q; ++b) {
      CHECK(same_values(dhat_odd(dhat_odd(g, a), b), -dhat_odd(dhat_odd(g, b), a)));
    }
  }
  CHECK(same_values(dhat_base(f * g, 1), dhat_base(f, 1) * g + f * dhat_base(g, 1)));
}

TEST_CASE("fiber-affine identification") {
  const SuperFunction f = parse("x1 + x2*e[1] - 3*e[3]");
  const FiberAffineFunction a = psi(f);
  const std::vector<double> x = {0.5, 2.0};
  const std::vector<double> e = {1.0, 7.0, -1.0};
  CHECK(a.eval(x, e) == doctest::Approx(0.5 + 2.0 + 3.0));
  CHECK(same_values(psi_inverse(a), f));
  CHECK_THROWS_AS(psi(parse("e[1,2]")), DomainError);
  CHECK(project_affine(parse("1 + e[1] + e[1,2]")).max_degree() == 1);
  CHECK(reduce(f).is_constant(0.0) == false);
}

TEST_CASE("render round trip") {
  const SuperFunction f = parse("x1 + (2*x2 - 1)*e[1] - e[1]*e[2] + sin(x1)*e[1,2,3]");
  CHECK(same_values(parse(render(f).c_str()), f));
}
