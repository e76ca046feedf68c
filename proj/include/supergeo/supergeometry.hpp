#pragma once

// Metrics, connections, torsion and the compatibility tensor on a chart of
// Pi E, plus the graded Levi-Civita construction.
//
// Coordinates are flattened: s in [0, n) is the base coordinate x_{s+1},
// s in [n, n+q) is the odd coordinate e*_{s-n+1}. Christoffel symbols follow
// nabla_{d_s} d_u = sum_r Gamma^r_{su} d_r with coefficients on the left.
//
// Metric slot convention: g(f X, Y) = (-1)^{|f||g|} f g(X, Y) and
// g(X, f Y) = (-1)^{|f|(|g|+|X|)} f g(X, Y).

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "supergeo/grassmann.hpp"
#include "supergeo/superfield.hpp"

namespace supergeo {

enum class CoordKind { kBase, kOdd };

struct CoordIndex {
  CoordKind kind = CoordKind::kBase;
  int index = 1;  // 1-based within its kind

  static CoordIndex base(int i) { return {CoordKind::kBase, i}; }
  static CoordIndex odd(int alpha) { return {CoordKind::kOdd, alpha}; }
  static CoordIndex from_flat(int s, const ChartSpec& chart);

  int parity() const { return kind == CoordKind::kOdd ? 1 : 0; }
  /// Throws DomainError when out of range for `chart`.
  int flat(const ChartSpec& chart) const;
  /// "x3" or "e2".
  std::string label() const;
  /// Parses a label produced by label().
  static CoordIndex parse(std::string_view label, const ChartSpec& chart);

  friend bool operator==(const CoordIndex&, const CoordIndex&) = default;
};

inline int coord_parity(int flat, const ChartSpec& chart) {
  return flat >= chart.n ? 1 : 0;
}

/// Sign (-1)^{a b} for parity bits.
inline double koszul_sign(int a, int b) { return ((a & b) & 1) ? -1.0 : 1.0; }

/// Metric coefficients and their coordinate derivatives at one point.
struct MetricValues {
  int dim = 0;
  GrassmannMatrix g;                 // g(r, s) = g_{rs}
  std::vector<GrassmannValue> dg;    // index (s*dim + u)*dim + r: d_s g_{ur}

  const GrassmannValue& derivative(int s, int u, int r) const {
    return dg[static_cast<std::size_t>((s * dim + u) * dim + r)];
  }
};

class SuperMetric {
 public:
  /// `coefficients` is row-major (r, s) over the n+q coordinates. Checks the
  /// dimension constraints of the parity and the parity of every entry;
  /// supersymmetry is checked numerically by supersymmetry_violation().
  SuperMetric(ChartSpec chart, int parity, std::vector<SuperFunction> coefficients);

  /// Missing entries default to the supersymmetric partner, or zero.
  struct Entry {
    int r;
    int s;
    SuperFunction value;
  };
  static SuperMetric from_entries(ChartSpec chart, int parity,
                                  const std::vector<Entry>& entries);

  const ChartSpec& chart() const { return chart_; }
  int parity() const { return parity_; }
  int dim() const { return chart_.total(); }
  const SuperFunction& coefficient(int r, int s) const {
    return coefficients_[static_cast<std::size_t>(r * dim() + s)];
  }

  MetricValues evaluate(std::span<const double> x) const;
  GrassmannMatrix values(std::span<const double> x) const;
  /// max over points and index pairs of |g_rs - (-1)^{|r||s|} g_sr|.
  double supersymmetry_violation(std::span<const std::vector<double>> points) const;

 private:
  ChartSpec chart_;
  int parity_;
  std::vector<SuperFunction> coefficients_;
  // base_derivatives_[i] holds d/dx_{i+1} of every coefficient, row-major
  std::vector<std::vector<SuperFunction>> base_derivatives_;
};

struct NondegeneracyReport {
  bool nondegenerate = true;
  std::vector<double> condition_numbers;  // one per sample, inf when singular
  double worst_condition = 1.0;
};

/// Invertibility of the body matrix of (g_rs) at each sample.
NondegeneracyReport metric_nondegenerate(const SuperMetric& g,
                                         std::span<const std::vector<double>> samples);

/// Christoffel values Gamma^r_{su} at one point.
class ChristoffelTable {
 public:
  ChristoffelTable(int dim, int q);

  int dim() const { return dim_; }
  int q() const { return q_; }
  GrassmannValue& operator()(int s, int u, int r) {
    return data_[static_cast<std::size_t>((s * dim_ + u) * dim_ + r)];
  }
  const GrassmannValue& operator()(int s, int u, int r) const {
    return data_[static_cast<std::size_t>((s * dim_ + u) * dim_ + r)];
  }

 private:
  int dim_;
  int q_;
  std::vector<GrassmannValue> data_;
};

class SuperConnection {
 public:
  using PointwiseField = std::function<ChristoffelTable(std::span<const double>)>;

  /// `symbols` indexed (s*N + u)*N + r. Throws DomainError when a symbol has
  /// mixed parity or the wrong parity |s|+|u|+|r|.
  static SuperConnection symbolic(ChartSpec chart, std::vector<SuperFunction> symbols);
  static SuperConnection pointwise(ChartSpec chart, PointwiseField field);
  static SuperConnection flat(ChartSpec chart);

  const ChartSpec& chart() const { return chart_; }
  int dim() const { return chart_.total(); }
  bool is_symbolic() const { return !symbols_.empty(); }
  /// Symbolic connections only.
  const SuperFunction& symbol(int s, int u, int r) const;

  ChristoffelTable at(std::span<const double> x) const;

 private:
  SuperConnection(ChartSpec chart, std::vector<SuperFunction> symbols,
                  PointwiseField field);

  ChartSpec chart_;
  std::vector<SuperFunction> symbols_;
  PointwiseField field_;
};

/// Components of T(d_s, d_u): Gamma^r_{su} - (-1)^{|s||u|} Gamma^r_{us}.
std::vector<GrassmannValue> torsion(const ChristoffelTable& gamma, int s, int u,
                                    const ChartSpec& chart);
std::vector<GrassmannValue> torsion(const SuperConnection& connection,
                                    CoordIndex s, CoordIndex u,
                                    std::span<const double> x);
/// Largest torsion coefficient over all index pairs.
double max_torsion(const ChristoffelTable& gamma, const ChartSpec& chart);

/// Theta(d_s, d_u, d_r) at the point the tables were evaluated at.
GrassmannValue theta(const ChristoffelTable& gamma, const MetricValues& metric,
                     int metric_parity, int s, int u, int r,
                     const ChartSpec& chart);
GrassmannValue theta(const SuperConnection& connection, const SuperMetric& g,
                     CoordIndex s, CoordIndex u, CoordIndex r,
                     std::span<const double> x);
double max_theta(const ChristoffelTable& gamma, const MetricValues& metric,
                 int metric_parity, const ChartSpec& chart);

/// Levi-Civita symbols at x from the graded cyclic formula solved against
/// the metric matrix. Verifies torsion and compatibility of the result.
/// Throws NotInvertibleError for a degenerate metric and ConsistencyError
/// when verification fails.
ChristoffelTable levi_civita_at(const SuperMetric& g, std::span<const double> x);

/// Same solve without the verification pass.
ChristoffelTable levi_civita_unchecked(const SuperMetric& g,
                                       std::span<const double> x);

/// Pointwise Levi-Civita connection. Every point in `check_points` is solved
/// and verified eagerly; other points are solved on demand.
SuperConnection levi_civita(const SuperMetric& g,
                            std::span<const std::vector<double>> check_points);

/// Absolute tolerance of the post-solve torsion and compatibility check.
inline constexpr double kLeviCivitaSelfCheckTolerance = 1e-9;

}  // namespace supergeo
