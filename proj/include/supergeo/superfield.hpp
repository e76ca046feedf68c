#pragma once

// Superfunctions on a single chart of Pi E with base coordinates x1..xn and
// odd coordinates e*_1..e*_q. A superfunction is a finite sum
// sum_I c_I(x) e*_I with symbolic coefficient functions.

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "supergeo/grassmann.hpp"
#include "supergeo/scalar_expr.hpp"

namespace supergeo {

struct ChartSpec {
  int n = 1;
  int q = 1;
  std::string name;

  /// Throws DomainError unless n >= 1 and 1 <= q <= 16.
  void validate() const;
  int total() const { return n + q; }

  friend bool operator==(const ChartSpec& a, const ChartSpec& b) {
    return a.n == b.n && a.q == b.q;
  }
};

class SuperFunction {
 public:
  using Components = std::map<MultiIndex, Expr>;

  explicit SuperFunction(ChartSpec chart);
  SuperFunction(ChartSpec chart, Components components);

  static SuperFunction scalar(ChartSpec chart, Expr coefficient);
  static SuperFunction monomial(ChartSpec chart, MultiIndex index,
                                Expr coefficient);

  const ChartSpec& chart() const { return chart_; }
  /// Never holds a component that is the literal constant 0.
  const Components& components() const { return components_; }
  /// Coefficient of e*_I, the zero expression when absent.
  Expr component(MultiIndex index) const;
  bool is_zero() const { return components_.empty(); }
  /// Even/odd by index length; the zero function counts as even.
  Parity parity() const;
  /// Largest index length present, -1 for the zero function.
  int max_degree() const;

 private:
  ChartSpec chart_;
  Components components_;
};

SuperFunction operator+(const SuperFunction& f, const SuperFunction& g);
SuperFunction operator-(const SuperFunction& f, const SuperFunction& g);
SuperFunction operator-(const SuperFunction& f);
SuperFunction scale(const Expr& c, const SuperFunction& f);
/// Graded product: coefficients multiply, monomials pick up the Grassmann sign.
SuperFunction operator*(const SuperFunction& f, const SuperFunction& g);

/// d/dx_i acting on the coefficient functions.
SuperFunction dhat_base(const SuperFunction& f, int i);
/// Left derivative with respect to e*_alpha.
SuperFunction dhat_odd(const SuperFunction& f, int alpha);

/// Body: the component of the empty multi-index.
Expr reduce(const SuperFunction& f);
/// Keeps the degree-0 and degree-1 components.
SuperFunction project_affine(const SuperFunction& f);

/// Function on the total space E of the form base(x) + sum_a linear[a](x) e_a.
struct FiberAffineFunction {
  ChartSpec chart;
  Expr base;
  std::vector<Expr> linear;

  /// Value at the point (x, e) of E.
  double eval(std::span<const double> x, std::span<const double> e) const;
};

/// Identification of degree <= 1 superfunctions with fiber-affine functions.
/// Throws DomainError when f has components of degree >= 2.
FiberAffineFunction psi(const SuperFunction& f);
SuperFunction psi_inverse(const FiberAffineFunction& g);

/// Pointwise value in Lambda_q.
GrassmannValue eval(const SuperFunction& f, std::span<const double> x);

/// Parses `expr*e[a,b] + ...`; any expression built from scalar terms and
/// generator monomials with + - * is accepted, division only by scalars.
SuperFunction parse_superfunction(std::string_view text, const ChartSpec& chart);
/// Sum of `(<expr>)*e[...]` terms, accepted by parse_superfunction.
std::string render(const SuperFunction& f);

}  // namespace supergeo
