#include "supergeo/scalar_expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

#include "format.hpp"
#include "supergeo/detail/syntax.hpp"
#include "supergeo/error.hpp"

namespace supergeo {

struct Expr::Node {
  ExprKind kind = ExprKind::kConst;
  double value = 0.0;
  int index = 0;  // variable or exponent
  Function function = Function::kSin;
  Expr a{Expr::Empty{}};
  Expr b{Expr::Empty{}};
  int max_variable = 0;
};

namespace {

const std::shared_ptr<const Expr::Node>& zero_node() {
  static const auto node = std::make_shared<const Expr::Node>();
  return node;
}

bool is_binary(ExprKind k) {
  return k == ExprKind::kAdd || k == ExprKind::kSub || k == ExprKind::kMul ||
         k == ExprKind::kDiv;
}

}  // namespace

Expr::Expr() : node_(zero_node()) {}

ExprKind Expr::kind() const { return node_->kind; }
double Expr::constant_value() const { return node_->value; }
int Expr::variable() const { return node_->index; }
int Expr::exponent() const { return node_->index; }
Function Expr::function() const { return node_->function; }
const Expr& Expr::lhs() const { return node_->a; }
const Expr& Expr::rhs() const { return node_->b; }
int Expr::max_variable() const { return node_->max_variable; }

bool Expr::is_constant(double v) const {
  return node_->kind == ExprKind::kConst && node_->value == v;
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  const auto& x = *a.node_;
  const auto& y = *b.node_;
  if (x.kind != y.kind) return false;
  switch (x.kind) {
    case ExprKind::kConst:
      return x.value == y.value;
    case ExprKind::kVar:
      return x.index == y.index;
    case ExprKind::kPow:
      return x.index == y.index && x.a == y.a;
    case ExprKind::kNeg:
      return x.a == y.a;
    case ExprKind::kFunc:
      return x.function == y.function && x.a == y.a;
    default:
      return x.a == y.a && x.b == y.b;
  }
}

Expr Expr::raw_constant(double v) {
  auto node = std::make_shared<Node>();
  node->value = v;
  return Expr(std::move(node));
}

Expr Expr::raw_variable(int i) {
  if (i < 1) throw DomainError("variable index must be >= 1");
  auto node = std::make_shared<Node>();
  node->kind = ExprKind::kVar;
  node->index = i;
  node->max_variable = i;
  return Expr(std::move(node));
}

Expr Expr::raw_binary(ExprKind kind, Expr a, Expr b) {
  if (!is_binary(kind)) throw DomainError("not a binary operator");
  auto node = std::make_shared<Node>();
  node->kind = kind;
  node->max_variable = std::max(a.max_variable(), b.max_variable());
  node->a = std::move(a);
  node->b = std::move(b);
  return Expr(std::move(node));
}

Expr Expr::raw_pow(Expr base, int exponent) {
  auto node = std::make_shared<Node>();
  node->kind = ExprKind::kPow;
  node->index = exponent;
  node->max_variable = base.max_variable();
  node->a = std::move(base);
  return Expr(std::move(node));
}

Expr Expr::raw_neg(Expr a) {
  auto node = std::make_shared<Node>();
  node->kind = ExprKind::kNeg;
  node->max_variable = a.max_variable();
  node->a = std::move(a);
  return Expr(std::move(node));
}

Expr Expr::raw_func(Function f, Expr a) {
  auto node = std::make_shared<Node>();
  node->kind = ExprKind::kFunc;
  node->function = f;
  node->max_variable = a.max_variable();
  node->a = std::move(a);
  return Expr(std::move(node));
}

// ---------------------------------------------------------------------------
// Simplifying builders

namespace {

bool is_const(const Expr& e) { return e.kind() == ExprKind::kConst; }

bool finite(double v) { return std::isfinite(v); }

double apply_function(Function f, double v) {
  switch (f) {
    case Function::kSin: return std::sin(v);
    case Function::kCos: return std::cos(v);
    case Function::kExp: return std::exp(v);
    case Function::kLog: return std::log(v);
    case Function::kSqrt: return std::sqrt(v);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

bool in_domain(Function f, double v) {
  if (f == Function::kLog) return v > 0.0;
  if (f == Function::kSqrt) return v >= 0.0;
  return true;
}

}  // namespace

Expr constant(double v) { return Expr::raw_constant(v); }
Expr variable(int i) { return Expr::raw_variable(i); }

Expr add(const Expr& a, const Expr& b) {
  if (is_const(a) && is_const(b)) {
    return constant(a.constant_value() + b.constant_value());
  }
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (b.kind() == ExprKind::kNeg) return sub(a, b.lhs());
  return Expr::raw_binary(ExprKind::kAdd, a, b);
}

Expr sub(const Expr& a, const Expr& b) {
  if (is_const(a) && is_const(b)) {
    return constant(a.constant_value() - b.constant_value());
  }
  if (b.is_zero()) return a;
  if (a.is_zero()) return neg(b);
  if (b.kind() == ExprKind::kNeg) return add(a, b.lhs());
  return Expr::raw_binary(ExprKind::kSub, a, b);
}

Expr mul(const Expr& a, const Expr& b) {
  if (is_const(a) && is_const(b)) {
    return constant(a.constant_value() * b.constant_value());
  }
  if (a.is_zero() || b.is_zero()) return constant(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  if (a.is_constant(-1.0)) return neg(b);
  if (b.is_constant(-1.0)) return neg(a);
  if (a.kind() == ExprKind::kNeg) return neg(mul(a.lhs(), b));
  if (b.kind() == ExprKind::kNeg) return neg(mul(a, b.lhs()));
  // keep constants on the left
  if (is_const(b)) return Expr::raw_binary(ExprKind::kMul, b, a);
  return Expr::raw_binary(ExprKind::kMul, a, b);
}

Expr div(const Expr& a, const Expr& b) {
  if (is_const(a) && is_const(b) && b.constant_value() != 0.0) {
    return constant(a.constant_value() / b.constant_value());
  }
  if (a.is_zero() && !b.is_zero()) return constant(0.0);
  if (b.is_constant(1.0)) return a;
  return Expr::raw_binary(ExprKind::kDiv, a, b);
}

Expr neg(const Expr& a) {
  if (is_const(a)) return constant(-a.constant_value());
  if (a.kind() == ExprKind::kNeg) return a.lhs();
  return Expr::raw_neg(a);
}

Expr pow(const Expr& base, int exponent) {
  if (exponent == 0) return constant(1.0);
  if (exponent == 1) return base;
  if (is_const(base)) {
    const double v = std::pow(base.constant_value(), exponent);
    if (finite(v)) return constant(v);
  }
  return Expr::raw_pow(base, exponent);
}

Expr apply(Function f, const Expr& a) {
  if (is_const(a) && in_domain(f, a.constant_value())) {
    const double v = apply_function(f, a.constant_value());
    if (finite(v)) return constant(v);
  }
  return Expr::raw_func(f, a);
}

const char* function_name(Function f) {
  switch (f) {
    case Function::kSin: return "sin";
    case Function::kCos: return "cos";
    case Function::kExp: return "exp";
    case Function::kLog: return "log";
    case Function::kSqrt: return "sqrt";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

double eval_node(const Expr& e, std::span<const double> x) {
  switch (e.kind()) {
    case ExprKind::kConst:
      return e.constant_value();
    case ExprKind::kVar:
      return x[static_cast<std::size_t>(e.variable() - 1)];
    case ExprKind::kAdd:
      return eval_node(e.lhs(), x) + eval_node(e.rhs(), x);
    case ExprKind::kSub:
      return eval_node(e.lhs(), x) - eval_node(e.rhs(), x);
    case ExprKind::kMul:
      return eval_node(e.lhs(), x) * eval_node(e.rhs(), x);
    case ExprKind::kDiv: {
      const double den = eval_node(e.rhs(), x);
      if (den == 0.0) throw EvalError("division by zero", render(e));
      return eval_node(e.lhs(), x) / den;
    }
    case ExprKind::kPow: {
      const double base = eval_node(e.lhs(), x);
      if (base == 0.0 && e.exponent() < 0) {
        throw EvalError("zero raised to a negative power", render(e));
      }
      return std::pow(base, e.exponent());
    }
    case ExprKind::kNeg:
      return -eval_node(e.lhs(), x);
    case ExprKind::kFunc: {
      const double v = eval_node(e.lhs(), x);
      if (!in_domain(e.function(), v)) {
        throw EvalError(std::string(function_name(e.function())) +
                            " argument outside its domain",
                        render(e));
      }
      return apply_function(e.function(), v);
    }
  }
  return 0.0;
}

}  // namespace

double eval(const Expr& e, std::span<const double> x) {
  if (static_cast<std::size_t>(e.max_variable()) > x.size()) {
    throw DimensionError("expression uses x" + std::to_string(e.max_variable()) +
                         " but the point has dimension " +
                         std::to_string(x.size()));
  }
  return eval_node(e, x);
}

// ---------------------------------------------------------------------------
// Differentiation

Expr diff(const Expr& e, int i) {
  // x_i cannot appear below a node whose largest variable is smaller
  if (e.max_variable() < i) return constant(0.0);
  switch (e.kind()) {
    case ExprKind::kConst:
      return constant(0.0);
    case ExprKind::kVar:
      return constant(e.variable() == i ? 1.0 : 0.0);
    case ExprKind::kAdd:
      return add(diff(e.lhs(), i), diff(e.rhs(), i));
    case ExprKind::kSub:
      return sub(diff(e.lhs(), i), diff(e.rhs(), i));
    case ExprKind::kMul:
      return add(mul(diff(e.lhs(), i), e.rhs()), mul(e.lhs(), diff(e.rhs(), i)));
    case ExprKind::kDiv: {
      const Expr da = diff(e.lhs(), i);
      const Expr db = diff(e.rhs(), i);
      if (db.is_zero()) return div(da, e.rhs());
      return div(sub(mul(da, e.rhs()), mul(e.lhs(), db)), pow(e.rhs(), 2));
    }
    case ExprKind::kPow: {
      const int n = e.exponent();
      return mul(mul(constant(n), pow(e.lhs(), n - 1)), diff(e.lhs(), i));
    }
    case ExprKind::kNeg:
      return neg(diff(e.lhs(), i));
    case ExprKind::kFunc: {
      const Expr& u = e.lhs();
      const Expr du = diff(u, i);
      if (du.is_zero()) return constant(0.0);
      switch (e.function()) {
        case Function::kSin:
          return mul(apply(Function::kCos, u), du);
        case Function::kCos:
          return neg(mul(apply(Function::kSin, u), du));
        case Function::kExp:
          return mul(e, du);
        case Function::kLog:
          return div(du, u);
        case Function::kSqrt:
          return div(du, mul(constant(2.0), e));
      }
    }
  }
  return constant(0.0);
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

int precedence(const Expr& e) {
  switch (e.kind()) {
    case ExprKind::kAdd:
    case ExprKind::kSub:
      return 1;
    case ExprKind::kMul:
    case ExprKind::kDiv:
      return 2;
    case ExprKind::kNeg:
      return 3;
    case ExprKind::kPow:
      return 4;
    default:
      return 5;
  }
}

void render_into(const Expr& e, int min_precedence, std::string& out);

void render_child(const Expr& e, int min_precedence, std::string& out) {
  if (precedence(e) < min_precedence) {
    out += '(';
    render_into(e, 0, out);
    out += ')';
  } else {
    render_into(e, min_precedence, out);
  }
}

void render_into(const Expr& e, int, std::string& out) {
  switch (e.kind()) {
    case ExprKind::kConst: {
      const double v = e.constant_value();
      if (std::signbit(v)) {
        out += '(' + detail::format_double(v) + ')';
      } else {
        out += detail::format_double(v);
      }
      return;
    }
    case ExprKind::kVar:
      out += 'x' + std::to_string(e.variable());
      return;
    case ExprKind::kAdd:
    case ExprKind::kSub:
      render_child(e.lhs(), 1, out);
      out += e.kind() == ExprKind::kAdd ? " + " : " - ";
      render_child(e.rhs(), 2, out);
      return;
    case ExprKind::kMul:
    case ExprKind::kDiv:
      render_child(e.lhs(), 2, out);
      out += e.kind() == ExprKind::kMul ? "*" : "/";
      render_child(e.rhs(), 3, out);
      return;
    case ExprKind::kNeg:
      out += '-';
      if (e.lhs().kind() == ExprKind::kConst) {
        // a bare literal after '-' would fold into a negative constant
        out += '(';
        render_into(e.lhs(), 0, out);
        out += ')';
      } else {
        render_child(e.lhs(), 3, out);
      }
      return;
    case ExprKind::kPow:
      render_child(e.lhs(), 5, out);
      out += '^' + std::to_string(e.exponent());
      return;
    case ExprKind::kFunc:
      out += function_name(e.function());
      out += '(';
      render_into(e.lhs(), 0, out);
      out += ')';
      return;
  }
}

}  // namespace

std::string render(const Expr& e) {
  std::string out;
  render_into(e, 0, out);
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

namespace {

class SyntaxParser {
 public:
  SyntaxParser(std::string_view src, int n, int q) : src_(src), n_(n), q_(q) {}

  std::unique_ptr<Syntax> parse() {
    auto tree = expr();
    skip_space();
    if (pos_ != src_.size()) fail("unexpected trailing input");
    return tree;
  }

 private:
  std::unique_ptr<Syntax> expr() {
    auto left = term();
    for (;;) {
      skip_space();
      const char c = peek();
      if (c != '+' && c != '-') return left;
      const std::size_t at = pos_++;
      left = binary(c == '+' ? ExprKind::kAdd : ExprKind::kSub, at,
                    std::move(left), term());
    }
  }

  std::unique_ptr<Syntax> term() {
    auto left = unary();
    for (;;) {
      skip_space();
      const char c = peek();
      if (c != '*' && c != '/') return left;
      const std::size_t at = pos_++;
      left = binary(c == '*' ? ExprKind::kMul : ExprKind::kDiv, at,
                    std::move(left), unary());
    }
  }

  std::unique_ptr<Syntax> unary() {
    skip_space();
    if (peek() != '-') return power();
    const std::size_t at = pos_++;
    skip_space();
    if (starts_number()) {
      const std::size_t save = pos_;
      const double v = number();
      skip_space();
      if (peek() != '^') {
        auto node = make(Syntax::Kind::kNumber, at);
        node->number = -v;
        return node;
      }
      pos_ = save;
    }
    auto node = make(Syntax::Kind::kNeg, at);
    node->children.push_back(unary());
    return node;
  }

  std::unique_ptr<Syntax> power() {
    auto base = atom();
    skip_space();
    if (peek() != '^') return base;
    const std::size_t at = pos_;
    // right associative tower of integer literals, folded into one exponent
    std::vector<long long> tower;
    while (peek() == '^') {
      ++pos_;
      tower.push_back(integer());
      skip_space();
    }
    long long exponent = tower.back();
    for (std::size_t k = tower.size() - 1; k-- > 0;) {
      if (exponent < 0) fail("non-integer exponent in power tower");
      const double v = std::pow(static_cast<double>(tower[k]),
                                static_cast<double>(exponent));
      if (std::abs(v) > 1024.0) fail("exponent too large");
      exponent = static_cast<long long>(v);
    }
    if (std::abs(exponent) > 1024) fail("exponent too large");
    auto node = make(Syntax::Kind::kPow, at);
    node->exponent = static_cast<int>(exponent);
    node->children.push_back(std::move(base));
    return node;
  }

  std::unique_ptr<Syntax> atom() {
    skip_space();
    const std::size_t at = pos_;
    if (starts_number()) {
      auto node = make(Syntax::Kind::kNumber, at);
      node->number = number();
      return node;
    }
    if (peek() == '(') {
      ++pos_;
      auto inner = expr();
      skip_space();
      if (peek() != ')') fail("expected ')'");
      ++pos_;
      return inner;
    }
    if (std::isalpha(static_cast<unsigned char>(peek()))) {
      std::size_t end = pos_;
      while (end < src_.size() &&
             std::isalpha(static_cast<unsigned char>(src_[end]))) {
        ++end;
      }
      const std::string_view word = src_.substr(pos_, end - pos_);
      if (word == "x" && end < src_.size() &&
          std::isdigit(static_cast<unsigned char>(src_[end]))) {
        pos_ = end;
        const long long index = integer_digits();
        if (index < 1 || index > n_) {
          pos_ = at;
          fail("variable x" + std::to_string(index) + " out of range 1.." +
               std::to_string(n_));
        }
        auto node = make(Syntax::Kind::kVar, at);
        node->var = static_cast<int>(index);
        return node;
      }
      if (word == "e" && end < src_.size() && src_[end] == '[') {
        pos_ = end + 1;
        return generator(at);
      }
      static constexpr std::pair<std::string_view, Function> kFunctions[] = {
          {"sin", Function::kSin}, {"cos", Function::kCos},
          {"exp", Function::kExp}, {"log", Function::kLog},
          {"sqrt", Function::kSqrt}};
      for (const auto& [name, f] : kFunctions) {
        if (word != name) continue;
        pos_ = end;
        skip_space();
        if (peek() != '(') fail("expected '(' after " + std::string(name));
        ++pos_;
        auto node = make(Syntax::Kind::kFunc, at);
        node->function = f;
        node->children.push_back(expr());
        skip_space();
        if (peek() != ')') fail("expected ')'");
        ++pos_;
        return node;
      }
      fail("unknown identifier '" + std::string(word) + "'");
    }
    if (pos_ >= src_.size()) fail("unexpected end of input");
    fail(std::string("unexpected character '") + peek() + "'");
  }

  std::unique_ptr<Syntax> generator(std::size_t at) {
    if (q_ <= 0) {
      pos_ = at;
      fail("odd generator not allowed in a scalar expression");
    }
    std::vector<int> labels;
    skip_space();
    if (peek() != ']') {
      for (;;) {
        skip_space();
        const std::size_t label_at = pos_;
        const long long label = integer_digits();
        if (label < 1 || label > q_) {
          pos_ = label_at;
          fail("generator label " + std::to_string(label) +
               " out of range 1.." + std::to_string(q_));
        }
        labels.push_back(static_cast<int>(label));
        skip_space();
        if (peek() != ',') break;
        ++pos_;
      }
    }
    if (peek() != ']') fail("expected ']'");
    ++pos_;
    auto node = make(Syntax::Kind::kGenerator, at);
    try {
      node->generators = MultiIndex::from_labels(labels);
    } catch (const DomainError& e) {
      pos_ = at;
      fail(e.what());
    }
    return node;
  }

  bool starts_number() const {
    const char c = peek();
    return std::isdigit(static_cast<unsigned char>(c)) || c == '.';
  }

  double number() {
    const char* begin = src_.data() + pos_;
    const char* end = src_.data() + src_.size();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(ptr - begin);
    return v;
  }

  long long integer() {
    skip_space();
    bool negative = false;
    if (peek() == '-' || peek() == '+') negative = src_[pos_++] == '-';
    skip_space();
    const long long v = integer_digits();
    return negative ? -v : v;
  }

  long long integer_digits() {
    if (!std::isdigit(static_cast<unsigned char>(peek()))) {
      fail("expected an integer");
    }
    long long v = 0;
    while (std::isdigit(static_cast<unsigned char>(peek()))) {
      v = v * 10 + (src_[pos_++] - '0');
      if (v > 1'000'000) fail("integer too large");
    }
    return v;
  }

  std::unique_ptr<Syntax> binary(ExprKind op, std::size_t at,
                                 std::unique_ptr<Syntax> a,
                                 std::unique_ptr<Syntax> b) {
    auto node = make(Syntax::Kind::kBinary, at);
    node->op = op;
    node->children.push_back(std::move(a));
    node->children.push_back(std::move(b));
    return node;
  }

  static std::unique_ptr<Syntax> make(Syntax::Kind kind, std::size_t at) {
    auto node = std::make_unique<Syntax>();
    node->kind = kind;
    node->position = at;
    return node;
  }

  char peek() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }
  void skip_space() {
    while (pos_ < src_.size() &&
           std::isspace(static_cast<unsigned char>(src_[pos_]))) {
      ++pos_;
    }
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(what, pos_);
  }

  std::string_view src_;
  int n_;
  int q_;
  std::size_t pos_ = 0;
};

}  // namespace

std::unique_ptr<Syntax> parse_syntax(std::string_view src, int n, int q) {
  return SyntaxParser(src, n, q).parse();
}

}  // namespace detail

namespace {

Expr lower_scalar(const detail::Syntax& s) {
  using Kind = detail::Syntax::Kind;
  switch (s.kind) {
    case Kind::kNumber:
      return Expr::raw_constant(s.number);
    case Kind::kVar:
      return Expr::raw_variable(s.var);
    case Kind::kGenerator:
      throw ParseError("odd generator not allowed in a scalar expression",
                       s.position);
    case Kind::kBinary:
      return Expr::raw_binary(s.op, lower_scalar(*s.children[0]),
                              lower_scalar(*s.children[1]));
    case Kind::kPow:
      return Expr::raw_pow(lower_scalar(*s.children[0]), s.exponent);
    case Kind::kNeg:
      return Expr::raw_neg(lower_scalar(*s.children[0]));
    case Kind::kFunc:
      return Expr::raw_func(s.function, lower_scalar(*s.children[0]));
  }
  return Expr();
}

}  // namespace

Expr parse_expr(std::string_view src, int n) {
  return lower_scalar(*detail::parse_syntax(src, n, 0));
}

}  // namespace supergeo
