#include "supergeo/grassmann.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "supergeo/error.hpp"
#include "format.hpp"

namespace supergeo {

namespace {

[[noreturn]] void throw_q_mismatch(int a, int b) {
  throw DimensionError("Grassmann operands have q=" + std::to_string(a) +
                       " and q=" + std::to_string(b));
}

[[noreturn]] void throw_bad_q(int q) {
  throw DimensionError("generator count " + std::to_string(q) + " outside 0..16");
}

inline void require_same_q(int a, int b) {
  if (a != b) [[unlikely]] throw_q_mismatch(a, b);
}

inline void require_valid_q(int q) {
  if (q < 0 || q > kMaxGenerators) [[unlikely]] throw_bad_q(q);
}

// Largest q for which products accumulate into a dense array.
constexpr int kDenseProductQ = 8;

bool is_scalar(const GrassmannValue::TermList& terms) {
  return terms.size() == 1 && terms[0].index.empty();
}

bool index_fits(MultiIndex index, int q) {
  return q >= kMaxGenerators || (index.mask() >> q) == 0;
}

// Sorts by mask, sums duplicates, drops zeros.
void normalize(GrassmannValue::TermList& terms) {
  std::sort(terms.begin(), terms.end(),
            [](const auto& a, const auto& b) { return a.index < b.index; });
  std::size_t out = 0;
  for (std::size_t i = 0; i < terms.size();) {
    MultiIndex index = terms[i].index;
    double sum = 0.0;
    for (; i < terms.size() && terms[i].index == index; ++i) {
      sum += terms[i].coefficient;
    }
    if (sum != 0.0) terms[out++] = {index, sum};
  }
  terms.resize(out);
}

}  // namespace

// ---------------------------------------------------------------------------
// MultiIndex

MultiIndex MultiIndex::from_labels(std::span<const int> labels) {
  std::uint32_t mask = 0;
  int previous = 0;
  for (int label : labels) {
    if (label < 1 || label > kMaxGenerators) {
      throw DomainError("generator label " + std::to_string(label) +
                        " outside 1..16");
    }
    if (label <= previous) {
      throw DomainError("multi-index labels must be strictly increasing");
    }
    mask |= std::uint32_t{1} << (label - 1);
    previous = label;
  }
  return from_mask(mask);
}

int MultiIndex::size() const { return std::popcount(mask_); }

int MultiIndex::max_label() const {
  return mask_ == 0 ? 0 : 32 - std::countl_zero(mask_);
}

std::vector<int> MultiIndex::labels() const {
  std::vector<int> out;
  for (std::uint32_t m = mask_; m != 0; m &= m - 1) {
    out.push_back(std::countr_zero(m) + 1);
  }
  return out;
}

int product_sign(MultiIndex a, MultiIndex b) {
  if ((a.mask() & b.mask()) != 0) return 0;
  int swaps = 0;
  for (std::uint32_t m = b.mask(); m != 0; m &= m - 1) {
    const int bit = std::countr_zero(m);
    // generators of a with a larger label than this generator of b
    swaps += std::popcount(a.mask() >> (bit + 1));
  }
  return (swaps & 1) ? -1 : 1;
}

// ---------------------------------------------------------------------------
// GrassmannValue

GrassmannValue::GrassmannValue(int q) : q_(q) { require_valid_q(q); }

GrassmannValue GrassmannValue::scalar(int q, double c) {
  return monomial(q, MultiIndex{}, c);
}

GrassmannValue GrassmannValue::generator(int q, int alpha) {
  if (alpha < 1 || alpha > q) {
    throw DomainError("generator " + std::to_string(alpha) + " outside 1.." +
                      std::to_string(q));
  }
  return monomial(q, MultiIndex::single(alpha), 1.0);
}

GrassmannValue GrassmannValue::monomial(int q, MultiIndex index, double c) {
  GrassmannValue v(q);
  if (!index_fits(index, q)) {
    throw DomainError("multi-index exceeds generator count " +
                      std::to_string(q));
  }
  if (c != 0.0) v.terms_.push_back({index, c});
  return v;
}

GrassmannValue GrassmannValue::from_terms(int q, std::span<const Term> input) {
  return from_list(q, TermList(input.begin(), input.end()));
}

GrassmannValue GrassmannValue::from_list(int q, TermList terms) {
  GrassmannValue v(q);
  for (const auto& t : terms) {
    if (!index_fits(t.index, q)) {
      throw DomainError("multi-index exceeds generator count " +
                        std::to_string(q));
    }
  }
  normalize(terms);
  v.terms_ = std::move(terms);
  return v;
}

double GrassmannValue::coefficient(MultiIndex index) const {
  auto it = std::lower_bound(
      terms_.begin(), terms_.end(), index,
      [](const Term& t, MultiIndex i) { return t.index < i; });
  return (it != terms_.end() && it->index == index) ? it->coefficient : 0.0;
}

double GrassmannValue::max_abs() const {
  double m = 0.0;
  for (const auto& t : terms_) m = std::max(m, std::abs(t.coefficient));
  return m;
}

GrassmannValue& GrassmannValue::operator+=(const GrassmannValue& other) {
  require_same_q(q_, other.q_);
  if (other.terms_.empty()) return *this;
  if (terms_.empty()) {
    terms_ = other.terms_;
    return *this;
  }
  if (terms_.size() == other.terms_.size() &&
      std::equal(terms_.begin(), terms_.end(), other.terms_.begin(),
                 [](const Term& x, const Term& y) { return x.index == y.index; })) {
    bool cancelled = false;
    for (std::size_t k = 0; k < terms_.size(); ++k) {
      terms_[k].coefficient += other.terms_[k].coefficient;
      cancelled = cancelled || terms_[k].coefficient == 0.0;
    }
    if (cancelled) {
      terms_.erase(std::remove_if(terms_.begin(), terms_.end(),
                                  [](const Term& t) { return t.coefficient == 0.0; }),
                   terms_.end());
    }
    return *this;
  }
  TermList merged;
  merged.reserve(terms_.size() + other.terms_.size());
  auto a = terms_.begin();
  auto b = other.terms_.begin();
  while (a != terms_.end() || b != other.terms_.end()) {
    if (b == other.terms_.end() || (a != terms_.end() && a->index < b->index)) {
      merged.push_back(*a++);
    } else if (a == terms_.end() || b->index < a->index) {
      merged.push_back(*b++);
    } else {
      const double sum = a->coefficient + b->coefficient;
      if (sum != 0.0) merged.push_back({a->index, sum});
      ++a;
      ++b;
    }
  }
  terms_ = std::move(merged);
  return *this;
}

GrassmannValue& GrassmannValue::operator-=(const GrassmannValue& other) {
  return *this += -1.0 * other;
}

GrassmannValue& GrassmannValue::operator*=(double s) {
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& t : terms_) t.coefficient *= s;
  return *this;
}

GrassmannValue operator*(const GrassmannValue& a, const GrassmannValue& b) {
  require_same_q(a.q_, b.q_);
  GrassmannValue out(a.q_);
  if (a.terms_.empty() || b.terms_.empty()) return out;
  if (is_scalar(a.terms_)) return a.terms_[0].coefficient * b;
  if (is_scalar(b.terms_)) return b.terms_[0].coefficient * a;
  if (a.q_ <= kDenseProductQ) {
    std::array<double, std::size_t{1} << kDenseProductQ> acc;
    std::array<bool, std::size_t{1} << kDenseProductQ> hit;
    const std::size_t size = std::size_t{1} << a.q_;
    std::fill_n(acc.begin(), size, 0.0);
    std::fill_n(hit.begin(), size, false);
    for (const auto& ta : a.terms_) {
      for (const auto& tb : b.terms_) {
        const int sign = product_sign(ta.index, tb.index);
        if (sign == 0) continue;
        const std::uint32_t m = ta.index.mask() | tb.index.mask();
        acc[m] += sign * ta.coefficient * tb.coefficient;
        hit[m] = true;
      }
    }
    for (std::size_t m = 0; m < size; ++m) {
      if (hit[m] && acc[m] != 0.0) {
        out.terms_.push_back({MultiIndex::from_mask(static_cast<std::uint32_t>(m)), acc[m]});
      }
    }
    return out;
  }
  out.terms_.reserve(a.terms_.size() * b.terms_.size());
  for (const auto& ta : a.terms_) {
    for (const auto& tb : b.terms_) {
      const int sign = product_sign(ta.index, tb.index);
      if (sign == 0) continue;
      out.terms_.push_back(
          {MultiIndex::from_mask(ta.index.mask() | tb.index.mask()),
           sign * ta.coefficient * tb.coefficient});
    }
  }
  normalize(out.terms_);
  return out;
}

bool operator==(const GrassmannValue& a, const GrassmannValue& b) {
  if (a.q_ != b.q_ || a.terms_.size() != b.terms_.size()) return false;
  for (std::size_t i = 0; i < a.terms_.size(); ++i) {
    if (a.terms_[i].index != b.terms_[i].index ||
        a.terms_[i].coefficient != b.terms_[i].coefficient) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Decomposition and derivatives

double body(const GrassmannValue& a) { return a.coefficient(MultiIndex{}); }

GrassmannValue soul(const GrassmannValue& a) {
  GrassmannValue::TermList terms;
  for (const auto& t : a.terms()) {
    if (!t.index.empty()) terms.push_back(t);
  }
  return GrassmannValue::from_list(a.q(), std::move(terms));
}

GrassmannValue degree_project(const GrassmannValue& a, int k) {
  GrassmannValue::TermList terms;
  for (const auto& t : a.terms()) {
    if (t.index.size() == k) terms.push_back(t);
  }
  return GrassmannValue::from_list(a.q(), std::move(terms));
}

Parity parity(const GrassmannValue& a) {
  bool even = false;
  bool odd = false;
  for (const auto& t : a.terms()) {
    (t.index.size() % 2 == 0 ? even : odd) = true;
  }
  if (even && odd) return Parity::kMixed;
  return odd ? Parity::kOdd : Parity::kEven;
}

GrassmannValue grade_involution(const GrassmannValue& a) {
  GrassmannValue::TermList terms = a.terms();
  for (auto& t : terms) {
    if (t.index.size() % 2 == 1) t.coefficient = -t.coefficient;
  }
  return GrassmannValue::from_list(a.q(), std::move(terms));
}

GrassmannValue left_derivative(int alpha, const GrassmannValue& a) {
  if (alpha < 1 || alpha > a.q()) {
    throw DomainError("derivative generator " + std::to_string(alpha) +
                      " outside 1.." + std::to_string(a.q()));
  }
  const std::uint32_t bit = std::uint32_t{1} << (alpha - 1);
  GrassmannValue::TermList terms;
  for (const auto& t : a.terms()) {
    if ((t.index.mask() & bit) == 0) continue;
    const int before = std::popcount(t.index.mask() & (bit - 1));
    terms.push_back({MultiIndex::from_mask(t.index.mask() & ~bit),
                     (before & 1) ? -t.coefficient : t.coefficient});
  }
  return GrassmannValue::from_list(a.q(), std::move(terms));
}

GrassmannValue invert(const GrassmannValue& a) {
  const double b = body(a);
  if (b == 0.0) {
    throw NotInvertibleError("Grassmann value with zero body is not invertible");
  }
  // a^{-1} = b^{-1} sum_k (-s/b)^k, finite because s is nilpotent
  const GrassmannValue step = (-1.0 / b) * soul(a);
  GrassmannValue power = GrassmannValue::scalar(a.q(), 1.0);
  GrassmannValue sum = power;
  for (int k = 1; k <= a.q(); ++k) {
    power = power * step;
    if (power.is_zero()) break;
    sum += power;
  }
  return (1.0 / b) * sum;
}

GrassmannValue substitute(const GrassmannValue& a,
                          std::span<const GrassmannValue> images) {
  if (static_cast<int>(images.size()) != a.q()) {
    throw DimensionError("substitution needs one image per generator");
  }
  const int target_q = images.empty() ? 0 : images.front().q();
  GrassmannValue out(target_q);
  for (const auto& t : a.terms()) {
    GrassmannValue product = GrassmannValue::scalar(target_q, t.coefficient);
    for (int label : t.index.labels()) {
      product = product * images[label - 1];
      if (product.is_zero()) break;
    }
    out += product;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Matrices

GrassmannMatrix::GrassmannMatrix(std::size_t rows, std::size_t cols, int q)
    : rows_(rows), cols_(cols), q_(q), data_(rows * cols, GrassmannValue(q)) {}

GrassmannMatrix operator*(const GrassmannMatrix& a, const GrassmannMatrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("matrix shapes do not chain");
  require_same_q(a.q(), b.q());
  GrassmannMatrix out(a.rows(), b.cols(), a.q());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      GrassmannValue sum(a.q());
      for (std::size_t k = 0; k < a.cols(); ++k) sum += a(i, k) * b(k, j);
      out(i, j) = std::move(sum);
    }
  }
  return out;
}

namespace {

std::vector<GrassmannValue> apply_real(const Eigen::MatrixXd& m,
                                       std::span<const GrassmannValue> v,
                                       int q) {
  std::vector<GrassmannValue> out(static_cast<std::size_t>(m.rows()),
                                  GrassmannValue(q));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    GrassmannValue::TermList terms;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double w = m(i, j);
      if (w == 0.0) continue;
      for (const auto& t : v[static_cast<std::size_t>(j)].terms()) {
        terms.push_back({t.index, w * t.coefficient});
      }
    }
    out[static_cast<std::size_t>(i)] =
        GrassmannValue::from_list(q, std::move(terms));
  }
  return out;
}

}  // namespace

std::vector<GrassmannValue> solve(const GrassmannMatrix& a,
                                  std::span<const GrassmannValue> b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.size() != n) {
    throw DimensionError("solve needs a square matrix and matching rhs");
  }
  for (const auto& v : b) require_same_q(a.q(), v.q());

  Eigen::MatrixXd body_matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) body_matrix(i, j) = body(a(i, j));
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(body_matrix);
  if (!lu.isInvertible()) {
    throw NotInvertibleError("body matrix is singular");
  }
  const Eigen::MatrixXd body_inverse = lu.inverse();

  // A = B + N with N nilpotent; x <- B^{-1}(b - N x) gains one degree per pass.
  std::vector<GrassmannValue> x = apply_real(body_inverse, b, a.q());
  for (int pass = 0; pass <= a.q(); ++pass) {
    std::vector<GrassmannValue> residual(b.begin(), b.end());
    bool soul_present = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const GrassmannValue s = soul(a(i, j));
        if (s.is_zero()) continue;
        soul_present = true;
        residual[i] -= s * x[j];
      }
    }
    if (!soul_present) break;
    std::vector<GrassmannValue> next = apply_real(body_inverse, residual, a.q());
    if (next == x) break;
    x = std::move(next);
  }
  return x;
}

GrassmannMatrix inverse(const GrassmannMatrix& a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw DimensionError("inverse needs a square matrix");
  const int q = a.q();

  Eigen::MatrixXd body_matrix(n, n);
  GrassmannMatrix souls(n, n, q);
  bool soul_present = false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      body_matrix(i, j) = body(a(i, j));
      souls(i, j) = soul(a(i, j));
      soul_present = soul_present || !souls(i, j).is_zero();
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(body_matrix);
  if (!lu.isInvertible()) throw NotInvertibleError("body matrix is singular");
  const Eigen::MatrixXd body_inverse = lu.inverse();

  GrassmannMatrix x(n, n, q);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      x(i, j) = GrassmannValue::scalar(q, body_inverse(i, j));
    }
  }
  if (!soul_present) return x;

  // X <- B^{-1} (1 - N X); each pass fixes one more degree.
  for (int pass = 0; pass < q; ++pass) {
    GrassmannMatrix nx(n, n, q);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        const GrassmannValue& s = souls(i, k);
        if (s.is_zero()) continue;
        for (std::size_t j = 0; j < n; ++j) nx(i, j) += s * x(k, j);
      }
    }
    GrassmannMatrix next(n, n, q);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        GrassmannValue v = GrassmannValue::scalar(q, body_inverse(i, j));
        for (std::size_t k = 0; k < n; ++k) {
          const double w = body_inverse(i, k);
          if (w != 0.0 && !nx(k, j).is_zero()) v -= w * nx(k, j);
        }
        next(i, j) = std::move(v);
      }
    }
    bool same = true;
    for (std::size_t i = 0; i < n && same; ++i) {
      for (std::size_t j = 0; j < n && same; ++j) same = next(i, j) == x(i, j);
    }
    x = std::move(next);
    if (same) break;
  }
  return x;
}

// ---------------------------------------------------------------------------
// Text

std::string render(const GrassmannValue& a) {
  if (a.is_zero()) return "0";
  GrassmannValue::TermList terms = a.terms();
  std::sort(terms.begin(), terms.end(), [](const auto& x, const auto& y) {
    if (x.index.size() != y.index.size()) {
      return x.index.size() < y.index.size();
    }
    return x.index.labels() < y.index.labels();
  });
  std::string out;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const auto& t = terms[k];
    const double c = t.coefficient;
    if (k == 0) {
      out += detail::format_double(c);
    } else {
      out += c < 0 ? " - " : " + ";
      out += detail::format_double(std::abs(c));
    }
    if (!t.index.empty()) {
      out += "*e[";
      const auto labels = t.index.labels();
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(labels[i]);
      }
      out += ']';
    }
  }
  return out;
}

namespace {

class GrassmannParser {
 public:
  GrassmannParser(std::string_view text, int q) : text_(text), q_(q) {}

  GrassmannValue parse() {
    GrassmannValue::TermList terms;
    skip_space();
    double sign = 1.0;
    if (peek() == '-' || peek() == '+') {
      sign = take() == '-' ? -1.0 : 1.0;
    }
    terms.push_back(term(sign));
    for (skip_space(); pos_ < text_.size(); skip_space()) {
      const char op = take();
      if (op != '+' && op != '-') fail("expected '+' or '-'");
      terms.push_back(term(op == '-' ? -1.0 : 1.0));
    }
    return GrassmannValue::from_list(q_, std::move(terms));
  }

 private:
  GrassmannValue::Term term(double sign) {
    skip_space();
    double c = 1.0;
    if (peek() != 'e') {
      c = number();
      skip_space();
      if (peek() != '*') return {MultiIndex{}, sign * c};
      ++pos_;
      skip_space();
    }
    return {monomial(), sign * c};
  }

  MultiIndex monomial() {
    if (take() != 'e') fail("expected 'e['");
    if (take() != '[') fail("expected '['");
    std::vector<int> labels;
    skip_space();
    if (peek() != ']') {
      for (;;) {
        skip_space();
        labels.push_back(static_cast<int>(number()));
        skip_space();
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        break;
      }
    }
    if (take() != ']') fail("expected ']'");
    for (int l : labels) {
      if (l < 1 || l > q_) fail("generator label out of range");
    }
    try {
      return MultiIndex::from_labels(labels);
    } catch (const DomainError& e) {
      fail(e.what());
    }
  }

  double number() {
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr == begin) fail("expected a number");
    pos_ += static_cast<std::size_t>(ptr - begin);
    return v;
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  char take() { return pos_ < text_.size() ? text_[pos_++] : '\0'; }
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(what, pos_);
  }

  std::string_view text_;
  int q_;
  std::size_t pos_ = 0;
};

}  // namespace

GrassmannValue parse_grassmann(std::string_view text, int q) {
  require_valid_q(q);
  return GrassmannParser(text, q).parse();
}

}  // namespace supergeo
