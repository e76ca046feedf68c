#pragma once

// Reduction of connections and metrics on Pi E to classical objects on the
// total space E, in coordinates (x_1..x_n, e_1..e_q) of E. Indices are
// flattened exactly as in supergeometry.hpp.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "supergeo/scalar_expr.hpp"
#include "supergeo/superfield.hpp"
#include "supergeo/supergeometry.hpp"

namespace supergeo {

/// Symbolic fiber-affine coefficient c(x) + sum_b l_b(x) e_b.
struct FiberAffineChristoffel {
  Expr constant_part;
  std::vector<Expr> linear_part;  // empty means zero

  bool is_zero() const;
};

/// A fiber-affine coefficient evaluated at a base point.
struct FiberAffineValue {
  double constant = 0.0;
  std::vector<double> linear;  // empty means zero

  double at(std::span<const double> e) const;
  bool is_zero() const;
};

/// Fiber-affine Christoffel symbols Gamma^TE^r_{su} at one base point,
/// indexed (s*N + u)*N + r.
struct ReducedTable {
  int dim = 0;
  std::vector<FiberAffineValue> entries;

  const FiberAffineValue& operator()(int s, int u, int r) const {
    return entries[static_cast<std::size_t>((s * dim + u) * dim + r)];
  }
  FiberAffineValue& operator()(int s, int u, int r) {
    return entries[static_cast<std::size_t>((s * dim + u) * dim + r)];
  }
};

class ReducedConnection {
 public:
  using PointwiseField = std::function<ReducedTable(std::span<const double>)>;

  ReducedConnection(ChartSpec chart, std::vector<FiberAffineChristoffel> symbols);
  ReducedConnection(ChartSpec chart, PointwiseField field);

  const ChartSpec& chart() const { return chart_; }
  int dim() const { return chart_.total(); }
  bool is_symbolic() const { return !symbols_.empty(); }
  /// Symbolic reductions only.
  const FiberAffineChristoffel& symbol(int s, int u, int r) const;

  /// Fiber-affine symbols over the base point x.
  ReducedTable table(std::span<const double> x) const;
  /// Dense symbols at y = (x, e) in E, indexed (s*N + u)*N + r.
  std::vector<double> at(std::span<const double> y) const;

  /// Replaces one symbol; used to build negative controls.
  ReducedConnection with_symbol(int s, int u, int r, FiberAffineChristoffel value) const;

 private:
  ChartSpec chart_;
  std::vector<FiberAffineChristoffel> symbols_;
  PointwiseField field_;
};

class ReducedMetric {
 public:
  ReducedMetric(ChartSpec chart, int parity_origin,
                std::vector<FiberAffineChristoffel> coefficients);

  const ChartSpec& chart() const { return chart_; }
  int parity_origin() const { return parity_origin_; }
  int dim() const { return chart_.total(); }
  const FiberAffineChristoffel& coefficient(int s, int u) const {
    return coefficients_[static_cast<std::size_t>(s * dim() + u)];
  }

  /// Dense N x N values at y = (x, e), row-major.
  std::vector<double> at(std::span<const double> y) const;
  /// d_s g_{ur} at y, indexed (s*N + u)*N + r.
  std::vector<double> derivatives(std::span<const double> y) const;

 private:
  ChartSpec chart_;
  int parity_origin_;
  std::vector<FiberAffineChristoffel> coefficients_;
  // base_derivatives_[i] holds d/dx_{i+1} of every coefficient
  std::vector<std::vector<FiberAffineChristoffel>> base_derivatives_;
};

/// Reduction of a single super Christoffel value at a point.
ReducedTable reduce_table(const ChristoffelTable& gamma, const ChartSpec& chart);

ReducedConnection reduce_connection(const SuperConnection& connection);
ReducedMetric reduce_metric(const SuperMetric& g);

struct ViolationReport {
  double max_violation = 0.0;
  std::size_t samples = 0;
};

/// Samples are points y = (x, e) of E.
ViolationReport reduced_torsion_check(const ReducedConnection& connection,
                                      std::span<const std::vector<double>> samples);
ViolationReport reduced_compat_check(const ReducedConnection& connection,
                                     const ReducedMetric& metric,
                                     std::span<const std::vector<double>> samples);

/// Classical Levi-Civita symbols of g^TE at y, indexed (s*N + u)*N + r.
/// Throws DomainError for an even origin and NotInvertibleError when g^TE
/// is singular at y.
std::vector<double> classical_levi_civita(const ReducedMetric& metric,
                                          std::span<const double> y);

/// max |reduce_connection(nabla) - classical_levi_civita(g^TE)| over samples.
ViolationReport levi_civita_preservation(const ReducedConnection& connection,
                                         const ReducedMetric& metric,
                                         std::span<const std::vector<double>> samples);

/// Structural checks of the reduction against the super connection at base
/// points: vanishing patterns, fiber-affinity and the coordinate formulas.
/// Every deviation is expected to be exactly zero.
struct StructureReport {
  std::size_t pattern_failures = 0;
  std::size_t formula_failures = 0;
  std::size_t metric_failures = 0;
  std::size_t samples = 0;
  std::vector<std::string> messages;

  bool ok() const {
    return pattern_failures == 0 && formula_failures == 0 && metric_failures == 0;
  }
};
StructureReport reduction_structure_check(const SuperConnection& connection,
                                          const ReducedConnection& reduced,
                                          const SuperMetric* metric,
                                          const ReducedMetric* reduced_metric,
                                          std::span<const std::vector<double>> base_samples);

/// Classical data on M and E read off from the super objects.
struct AppendixAReduction {
  ChartSpec chart;
  int parity = 0;
  std::vector<Expr> base_metric;  // g^TM_{ij}, n x n, even metrics only
  std::vector<Expr> two_form;     // omega^E_{ab}, q x q, even metrics only
  std::vector<Expr> bundle_iso;   // ~g_{a i} as a q x n table, odd metrics only
  SuperConnection connection;

  /// nabla^E coefficients ~Gamma^c_{i a} at x, indexed (i*q + a)*q + c.
  std::vector<double> bundle_connection(std::span<const double> x) const;
};
AppendixAReduction appendix_a_reduce(const SuperConnection& connection,
                                     const SuperMetric& g);

struct AppendixAReport {
  double antisymmetry_violation = 0.0;      // omega^E, exact
  double worst_two_form_condition = 1.0;    // omega^E, even metrics
  double worst_iso_condition = 1.0;         // B^E, odd metrics
  bool degenerate = false;
  double bundle_connection_mismatch = 0.0;  // against the reduced connection
  std::size_t samples = 0;
};
AppendixAReport appendix_a_check(const AppendixAReduction& reduction,
                                 const ReducedConnection& reduced,
                                 std::span<const std::vector<double>> base_samples);

/// Gamma^TM^k_{ij} at x: base block of the reduction at the zero section,
/// indexed (i*n + j)*n + k.
std::vector<double> zero_section_pullback(const ReducedConnection& reduced,
                                          std::span<const double> x);

/// Frame change e_a = sum_b G_{ab}(x) e'_b on the odd coordinates, applied
/// before and after reduction. Returns the largest difference between the
/// two routes over `samples` of E (in primed coordinates).
/// Throws NotInvertibleError when G is singular at a sample.
ViolationReport automorphism_equivariance(const SuperConnection& connection,
                                          const std::vector<Expr>& frame,
                                          std::span<const std::vector<double>> samples);

/// Super Christoffel table of the frame-changed connection at base point x.
ChristoffelTable transform_connection(const SuperConnection& connection,
                                      const std::vector<Expr>& frame,
                                      std::span<const double> x);

}  // namespace supergeo
