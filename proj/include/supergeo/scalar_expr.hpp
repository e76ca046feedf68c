#pragma once

// Symbolic scalar expressions over chart variables x1..xn.
//
// Trees are immutable and shared. The builder functions (add, mul, ...) apply
// light simplification: constant folding and the 0/1 identities. The parser
// builds trees verbatim so that parse(render(e)) reproduces e.

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace supergeo {

enum class ExprKind { kConst, kVar, kAdd, kSub, kMul, kDiv, kPow, kNeg, kFunc };
enum class Function { kSin, kCos, kExp, kLog, kSqrt };

class Expr {
 public:
  struct Node;

  /// The constant 0.
  Expr();

  ExprKind kind() const;
  double constant_value() const;  // kConst only
  int variable() const;           // kVar only, 1-based
  int exponent() const;           // kPow only
  Function function() const;      // kFunc only
  const Expr& lhs() const;        // binary, kPow base, kNeg / kFunc operand
  const Expr& rhs() const;        // binary only

  bool is_constant(double v) const;
  bool is_zero() const { return is_constant(0.0); }
  /// Largest variable index appearing in the tree, 0 when none.
  int max_variable() const;

  /// Structural equality.
  friend bool operator==(const Expr& a, const Expr& b);

  // Verbatim constructors, no simplification.
  static Expr raw_constant(double v);
  static Expr raw_variable(int i);
  static Expr raw_binary(ExprKind kind, Expr a, Expr b);
  static Expr raw_pow(Expr base, int exponent);
  static Expr raw_neg(Expr a);
  static Expr raw_func(Function f, Expr a);

 private:
  friend struct Node;
  struct Empty {};
  // Unset child slot of a tree node.
  explicit Expr(Empty) {}
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

Expr constant(double v);
Expr variable(int i);
Expr add(const Expr& a, const Expr& b);
Expr sub(const Expr& a, const Expr& b);
Expr mul(const Expr& a, const Expr& b);
Expr div(const Expr& a, const Expr& b);
Expr neg(const Expr& a);
Expr pow(const Expr& base, int exponent);
Expr apply(Function f, const Expr& a);

inline Expr operator+(const Expr& a, const Expr& b) { return add(a, b); }
inline Expr operator-(const Expr& a, const Expr& b) { return sub(a, b); }
inline Expr operator*(const Expr& a, const Expr& b) { return mul(a, b); }
inline Expr operator/(const Expr& a, const Expr& b) { return div(a, b); }
inline Expr operator-(const Expr& a) { return neg(a); }

/// Parses `src` against the chart grammar; variables must satisfy 1 <= i <= n.
/// Throws ParseError.
Expr parse_expr(std::string_view src, int n);

/// Throws EvalError on log/sqrt outside the domain or division by zero, and
/// DimensionError when x is shorter than the largest variable index.
double eval(const Expr& e, std::span<const double> x);

/// Exact partial derivative with respect to x_i.
Expr diff(const Expr& e, int i);

/// Text accepted by parse_expr.
std::string render(const Expr& e);

const char* function_name(Function f);

}  // namespace supergeo
