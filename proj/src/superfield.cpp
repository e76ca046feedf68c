#include "supergeo/superfield.hpp"

#include <algorithm>
#include <bit>

#include "supergeo/detail/syntax.hpp"
#include "supergeo/error.hpp"

namespace supergeo {

void ChartSpec::validate() const {
  if (n < 1) throw DomainError("chart needs n >= 1, got " + std::to_string(n));
  if (q < 1 || q > kMaxGenerators) {
    throw DomainError("chart needs 1 <= q <= 16, got " + std::to_string(q));
  }
}

namespace {

void require_same_chart(const ChartSpec& a, const ChartSpec& b) {
  if (!(a == b)) {
    throw DimensionError("superfunctions live on different charts (" +
                         std::to_string(a.n) + "|" + std::to_string(a.q) +
                         " vs " + std::to_string(b.n) + "|" +
                         std::to_string(b.q) + ")");
  }
}

void accumulate(SuperFunction::Components& into, MultiIndex index,
                const Expr& value) {
  if (value.is_zero()) return;
  auto it = into.find(index);
  if (it == into.end()) {
    into.emplace(index, value);
    return;
  }
  it->second = add(it->second, value);
  if (it->second.is_zero()) into.erase(it);
}

}  // namespace

SuperFunction::SuperFunction(ChartSpec chart) : chart_(std::move(chart)) {}

SuperFunction::SuperFunction(ChartSpec chart, Components components)
    : chart_(std::move(chart)) {
  for (auto& [index, expr] : components) {
    if (index.max_label() > chart_.q) {
      throw DomainError("multi-index exceeds odd rank " +
                        std::to_string(chart_.q));
    }
    if (expr.max_variable() > chart_.n) {
      throw DomainError("coefficient uses x" +
                        std::to_string(expr.max_variable()) +
                        " beyond chart dimension " + std::to_string(chart_.n));
    }
    if (!expr.is_zero()) components_.emplace(index, std::move(expr));
  }
}

SuperFunction SuperFunction::scalar(ChartSpec chart, Expr coefficient) {
  return monomial(std::move(chart), MultiIndex{}, std::move(coefficient));
}

SuperFunction SuperFunction::monomial(ChartSpec chart, MultiIndex index,
                                      Expr coefficient) {
  Components c;
  c.emplace(index, std::move(coefficient));
  return SuperFunction(std::move(chart), std::move(c));
}

Expr SuperFunction::component(MultiIndex index) const {
  auto it = components_.find(index);
  return it == components_.end() ? Expr() : it->second;
}

Parity SuperFunction::parity() const {
  bool even = false;
  bool odd = false;
  for (const auto& [index, expr] : components_) {
    (index.size() % 2 == 0 ? even : odd) = true;
  }
  if (even && odd) return Parity::kMixed;
  return odd ? Parity::kOdd : Parity::kEven;
}

int SuperFunction::max_degree() const {
  int d = -1;
  for (const auto& [index, expr] : components_) d = std::max(d, index.size());
  return d;
}

SuperFunction operator+(const SuperFunction& f, const SuperFunction& g) {
  require_same_chart(f.chart(), g.chart());
  SuperFunction::Components out = f.components();
  for (const auto& [index, expr] : g.components()) accumulate(out, index, expr);
  return SuperFunction(f.chart(), std::move(out));
}

SuperFunction operator-(const SuperFunction& f) {
  SuperFunction::Components out;
  for (const auto& [index, expr] : f.components()) out.emplace(index, neg(expr));
  return SuperFunction(f.chart(), std::move(out));
}

SuperFunction operator-(const SuperFunction& f, const SuperFunction& g) {
  return f + (-g);
}

SuperFunction scale(const Expr& c, const SuperFunction& f) {
  SuperFunction::Components out;
  for (const auto& [index, expr] : f.components()) {
    out.emplace(index, mul(c, expr));
  }
  return SuperFunction(f.chart(), std::move(out));
}

SuperFunction operator*(const SuperFunction& f, const SuperFunction& g) {
  require_same_chart(f.chart(), g.chart());
  SuperFunction::Components out;
  for (const auto& [i, a] : f.components()) {
    for (const auto& [j, b] : g.components()) {
      const int sign = product_sign(i, j);
      if (sign == 0) continue;
      const Expr term = mul(a, b);
      accumulate(out, MultiIndex::from_mask(i.mask() | j.mask()),
                 sign > 0 ? term : neg(term));
    }
  }
  return SuperFunction(f.chart(), std::move(out));
}

SuperFunction dhat_base(const SuperFunction& f, int i) {
  if (i < 1 || i > f.chart().n) {
    throw DomainError("base derivative index " + std::to_string(i) +
                      " outside 1.." + std::to_string(f.chart().n));
  }
  SuperFunction::Components out;
  for (const auto& [index, expr] : f.components()) {
    out.emplace(index, diff(expr, i));
  }
  return SuperFunction(f.chart(), std::move(out));
}

SuperFunction dhat_odd(const SuperFunction& f, int alpha) {
  if (alpha < 1 || alpha > f.chart().q) {
    throw DomainError("odd derivative index " + std::to_string(alpha) +
                      " outside 1.." + std::to_string(f.chart().q));
  }
  const std::uint32_t bit = std::uint32_t{1} << (alpha - 1);
  SuperFunction::Components out;
  for (const auto& [index, expr] : f.components()) {
    if ((index.mask() & bit) == 0) continue;
    const bool flip = (std::popcount(index.mask() & (bit - 1)) & 1) != 0;
    out.emplace(MultiIndex::from_mask(index.mask() & ~bit),
                flip ? neg(expr) : expr);
  }
  return SuperFunction(f.chart(), std::move(out));
}

Expr reduce(const SuperFunction& f) { return f.component(MultiIndex{}); }

SuperFunction project_affine(const SuperFunction& f) {
  SuperFunction::Components out;
  for (const auto& [index, expr] : f.components()) {
    if (index.size() <= 1) out.emplace(index, expr);
  }
  return SuperFunction(f.chart(), std::move(out));
}

double FiberAffineFunction::eval(std::span<const double> x,
                                 std::span<const double> e) const {
  double v = supergeo::eval(base, x);
  for (std::size_t a = 0; a < linear.size(); ++a) {
    if (!linear[a].is_zero()) v += supergeo::eval(linear[a], x) * e[a];
  }
  return v;
}

FiberAffineFunction psi(const SuperFunction& f) {
  if (f.max_degree() >= 2) {
    throw DomainError(
        "superfunction has components of degree >= 2 and is not fiber-affine");
  }
  FiberAffineFunction g{f.chart(), reduce(f),
                        std::vector<Expr>(static_cast<std::size_t>(f.chart().q))};
  for (int a = 1; a <= f.chart().q; ++a) {
    g.linear[static_cast<std::size_t>(a - 1)] =
        f.component(MultiIndex::single(a));
  }
  return g;
}

SuperFunction psi_inverse(const FiberAffineFunction& g) {
  if (static_cast<int>(g.linear.size()) != g.chart.q) {
    throw DimensionError("fiber-affine function needs q linear coefficients");
  }
  SuperFunction::Components c;
  c.emplace(MultiIndex{}, g.base);
  for (int a = 1; a <= g.chart.q; ++a) {
    c.emplace(MultiIndex::single(a), g.linear[static_cast<std::size_t>(a - 1)]);
  }
  return SuperFunction(g.chart, std::move(c));
}

GrassmannValue eval(const SuperFunction& f, std::span<const double> x) {
  if (static_cast<int>(x.size()) != f.chart().n) {
    throw DimensionError("point has dimension " + std::to_string(x.size()) +
                         ", chart has n=" + std::to_string(f.chart().n));
  }
  std::vector<GrassmannValue::Term> terms;
  terms.reserve(f.components().size());
  for (const auto& [index, expr] : f.components()) {
    terms.push_back({index, eval(expr, x)});
  }
  return GrassmannValue::from_terms(f.chart().q, std::move(terms));
}

// ---------------------------------------------------------------------------
// Text

namespace {

bool scalar_only(const SuperFunction& f) { return f.max_degree() <= 0; }

SuperFunction lower(const detail::Syntax& s, const ChartSpec& chart) {
  using Kind = detail::Syntax::Kind;
  const auto require_scalar = [&](const SuperFunction& f, const char* what) {
    if (!scalar_only(f)) {
      throw ParseError(std::string(what) + " needs a scalar operand",
                       s.position);
    }
  };
  switch (s.kind) {
    case Kind::kNumber:
      return SuperFunction::scalar(chart, Expr::raw_constant(s.number));
    case Kind::kVar:
      return SuperFunction::scalar(chart, Expr::raw_variable(s.var));
    case Kind::kGenerator:
      return SuperFunction::monomial(chart, s.generators, constant(1.0));
    case Kind::kBinary: {
      const SuperFunction a = lower(*s.children[0], chart);
      const SuperFunction b = lower(*s.children[1], chart);
      if (scalar_only(a) && scalar_only(b)) {
        // keep scalar subtrees verbatim
        return SuperFunction::scalar(
            chart, Expr::raw_binary(s.op, reduce(a), reduce(b)));
      }
      switch (s.op) {
        case ExprKind::kAdd: return a + b;
        case ExprKind::kSub: return a - b;
        case ExprKind::kMul: return a * b;
        default: {
          require_scalar(b, "division");
          SuperFunction::Components out;
          for (const auto& [index, expr] : a.components()) {
            out.emplace(index, div(expr, reduce(b)));
          }
          return SuperFunction(chart, std::move(out));
        }
      }
    }
    case Kind::kPow: {
      const SuperFunction base = lower(*s.children[0], chart);
      require_scalar(base, "power");
      return SuperFunction::scalar(chart,
                                   Expr::raw_pow(reduce(base), s.exponent));
    }
    case Kind::kNeg: {
      const SuperFunction a = lower(*s.children[0], chart);
      if (scalar_only(a)) {
        return SuperFunction::scalar(chart, Expr::raw_neg(reduce(a)));
      }
      return -a;
    }
    case Kind::kFunc: {
      const SuperFunction a = lower(*s.children[0], chart);
      require_scalar(a, function_name(s.function));
      return SuperFunction::scalar(chart, Expr::raw_func(s.function, reduce(a)));
    }
  }
  return SuperFunction(chart);
}

}  // namespace

SuperFunction parse_superfunction(std::string_view text,
                                  const ChartSpec& chart) {
  chart.validate();
  return lower(*detail::parse_syntax(text, chart.n, chart.q), chart);
}

std::string render(const SuperFunction& f) {
  if (f.is_zero()) return "0";
  std::vector<std::pair<MultiIndex, Expr>> terms(f.components().begin(),
                                                 f.components().end());
  std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
    if (a.first.size() != b.first.size()) return a.first.size() < b.first.size();
    return a.first.labels() < b.first.labels();
  });
  std::string out;
  for (const auto& [index, expr] : terms) {
    if (!out.empty()) out += " + ";
    out += '(' + render(expr) + ')';
    if (!index.empty()) {
      out += "*e[";
      const auto labels = index.labels();
      for (std::size_t k = 0; k < labels.size(); ++k) {
        if (k) out += ',';
        out += std::to_string(labels[k]);
      }
      out += ']';
    }
  }
  return out;
}

}  // namespace supergeo
