#pragma once

// Real Grassmann algebra Lambda_q with q <= 16 generators e[1..q].
//
// Elements are stored sparsely as (multi-index, coefficient) pairs. A
// multi-index is a strictly increasing set of generator labels and is encoded
// as a bitmask (bit alpha-1 <-> generator alpha).

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/container/small_vector.hpp>

namespace supergeo {

inline constexpr int kMaxGenerators = 16;

class MultiIndex {
 public:
  constexpr MultiIndex() = default;

  /// Throws DomainError unless `labels` is strictly increasing within 1..16.
  static MultiIndex from_labels(std::span<const int> labels);
  static MultiIndex from_labels(std::initializer_list<int> labels) {
    return from_labels(std::span<const int>(labels.begin(), labels.size()));
  }
  static constexpr MultiIndex from_mask(std::uint32_t mask) {
    MultiIndex m;
    m.mask_ = mask;
    return m;
  }
  static constexpr MultiIndex single(int alpha) {
    return from_mask(std::uint32_t{1} << (alpha - 1));
  }

  constexpr std::uint32_t mask() const { return mask_; }
  int size() const;
  bool empty() const { return mask_ == 0; }
  bool contains(int alpha) const { return (mask_ >> (alpha - 1)) & 1U; }
  /// Largest label, or 0 for the empty index.
  int max_label() const;
  std::vector<int> labels() const;

  friend constexpr bool operator==(MultiIndex, MultiIndex) = default;
  friend constexpr auto operator<=>(MultiIndex a, MultiIndex b) {
    return a.mask_ <=> b.mask_;
  }

 private:
  std::uint32_t mask_ = 0;
};

/// Sign of e_I * e_J relative to e_{I u J}; 0 when I and J intersect.
int product_sign(MultiIndex a, MultiIndex b);

enum class Parity { kEven, kOdd, kMixed };

/// Parity of a Z/2-graded quantity; 0 even, 1 odd.
inline int parity_bit(int p) { return p & 1; }

class GrassmannValue {
 public:
  struct Term {
    MultiIndex index;
    double coefficient;
  };
  using TermList = boost::container::small_vector<Term, 4>;

  explicit GrassmannValue(int q = 0);

  static GrassmannValue scalar(int q, double c);
  static GrassmannValue generator(int q, int alpha);
  static GrassmannValue monomial(int q, MultiIndex index, double c);
  /// Builds from arbitrary terms; duplicates are summed and zeros pruned.
  static GrassmannValue from_terms(int q, std::span<const Term> terms);
  static GrassmannValue from_list(int q, TermList terms);

  int q() const { return q_; }
  /// Terms sorted by bitmask, no zero coefficients.
  const TermList& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  double coefficient(MultiIndex index) const;
  /// max |coefficient|, 0 for the zero element.
  double max_abs() const;

  GrassmannValue& operator+=(const GrassmannValue& other);
  GrassmannValue& operator-=(const GrassmannValue& other);
  GrassmannValue& operator*=(double s);

  friend GrassmannValue operator+(GrassmannValue a, const GrassmannValue& b) {
    return a += b;
  }
  friend GrassmannValue operator-(GrassmannValue a, const GrassmannValue& b) {
    return a -= b;
  }
  friend GrassmannValue operator-(GrassmannValue a) { return a *= -1.0; }
  friend GrassmannValue operator*(double s, GrassmannValue a) { return a *= s; }
  friend GrassmannValue operator*(GrassmannValue a, double s) { return a *= s; }
  friend GrassmannValue operator*(const GrassmannValue& a,
                                  const GrassmannValue& b);

  /// Exact equality of stored terms.
  friend bool operator==(const GrassmannValue& a, const GrassmannValue& b);

 private:
  int q_;
  TermList terms_;
};

double body(const GrassmannValue& a);
GrassmannValue soul(const GrassmannValue& a);
GrassmannValue degree_project(const GrassmannValue& a, int k);
/// Even for the zero element.
Parity parity(const GrassmannValue& a);
/// Grade involution: multiplies odd-degree terms by -1.
GrassmannValue grade_involution(const GrassmannValue& a);

/// Left derivative d/de_alpha: e_I -> (-1)^{#{beta in I : beta < alpha}} e_{I\alpha}.
GrassmannValue left_derivative(int alpha, const GrassmannValue& a);

/// Throws NotInvertibleError when body(a) == 0.
GrassmannValue invert(const GrassmannValue& a);

/// Algebra homomorphism Lambda_q -> Lambda_{q'} sending e_alpha to
/// images[alpha-1]. Images must be odd for the map to respect the grading.
GrassmannValue substitute(const GrassmannValue& a,
                          std::span<const GrassmannValue> images);

/// Dense row-major matrix of Grassmann values.
class GrassmannMatrix {
 public:
  GrassmannMatrix(std::size_t rows, std::size_t cols, int q);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  int q() const { return q_; }
  GrassmannValue& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }
  const GrassmannValue& operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  int q_;
  std::vector<GrassmannValue> data_;
};

GrassmannMatrix operator*(const GrassmannMatrix& a, const GrassmannMatrix& b);

/// Solves A x = b in Lambda_q by a body solve plus nilpotent correction.
/// Throws NotInvertibleError when the body matrix is singular.
std::vector<GrassmannValue> solve(const GrassmannMatrix& a,
                                  std::span<const GrassmannValue> b);

/// Two-sided inverse of a square matrix with invertible body.
GrassmannMatrix inverse(const GrassmannMatrix& a);

/// Renders as `c0 + c1*e[1] + c12*e[1,2]`, terms ordered by degree then labels.
std::string render(const GrassmannValue& a);

/// Parses the syntax produced by render(). Throws ParseError.
GrassmannValue parse_grassmann(std::string_view text, int q);

}  // namespace supergeo
