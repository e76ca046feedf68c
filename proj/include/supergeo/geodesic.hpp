#pragma once

// Geodesics on both sides of the correspondence. A supercurve
// t -> f(t) + h(t) tau in R^{1|1} and a curve t -> (f(t), h(t)) in E share the
// same coordinate tuple, so both integrators use the state layout
// position = (f_1..f_n, h_1..h_q), velocity = (df, dh).

#include <functional>
#include <span>
#include <vector>

#include "supergeo/reduction.hpp"
#include "supergeo/sampling.hpp"
#include "supergeo/supergeometry.hpp"

namespace supergeo {

struct InitialCondition {
  std::vector<double> x0;
  std::vector<double> v0;
  std::vector<double> e0;
  std::vector<double> w0;
};

struct CurveSample {
  std::vector<double> times;
  std::vector<std::vector<double>> f;   // base components per sample
  std::vector<std::vector<double>> h;   // fiber components per sample
  std::vector<std::vector<double>> df;
  std::vector<std::vector<double>> dh;
  bool truncated = false;  // left the chart box before t_end

  std::size_t size() const { return times.size(); }
  /// (f, h) at sample k.
  std::vector<double> point(std::size_t k) const;
  std::vector<double> velocity(std::size_t k) const;
};

/// Acceleration as a function of position and velocity.
using GeodesicRhs = std::function<std::vector<double>(std::span<const double> position,
                                                      std::span<const double> velocity)>;

/// Component form of the super geodesic equation: the Christoffel values at f
/// are pulled back along e_b -> h_b tau into Lambda_1 and
/// -sum dq_u dq_r Gamma^s_{ur} is expanded in tau. The body gives the base
/// acceleration, the tau coefficient the fiber acceleration.
GeodesicRhs super_geodesic_rhs(const SuperConnection& connection);

/// y''^r = -sum y'^s y'^u Gamma^TE^r_{su}(y) on E.
GeodesicRhs classical_geodesic_rhs(const ReducedConnection& connection);

/// Geodesic equation of the zero-section connection on M (n components).
GeodesicRhs base_geodesic_rhs(const ReducedConnection& connection);

/// Fixed-step RK4 from (x0, e0) with velocity (v0, w0). Samples at multiples
/// of dt; the last step is shortened to land on t_end. Stops and flags the
/// curve when the base point leaves `box`.
/// Throws DomainError unless dt > 0, t_end > 0 and x0 lies in the box.
CurveSample integrate(const GeodesicRhs& rhs, const InitialCondition& ic,
                      const ChartBox& box, double t_end, double dt);

struct Correspondence {
  CurveSample super_curve;
  CurveSample classical_curve;
  std::vector<double> deviation;  // sup-norm distance per sample
  double max_deviation = 0.0;
};

/// Integrates both sides from the same initial condition. Throws DomainError
/// naming the side and time when either curve is truncated.
Correspondence correspond(const SuperConnection& connection,
                          const ReducedConnection& reduced, const InitialCondition& ic,
                          const ChartBox& box, double t_end, double dt);

double correspondence_deviation(const SuperConnection& connection,
                                const ReducedConnection& reduced,
                                const InitialCondition& ic, const ChartBox& box,
                                double t_end, double dt);

/// g^TE(y', y') at every sample of a curve in E.
std::vector<double> energy_along(const ReducedMetric& metric, const CurveSample& curve);

}  // namespace supergeo
