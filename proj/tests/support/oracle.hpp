#pragma once

// Reference implementations used only by the tests. They are written from
// the definitions and share no code with the solvers they check beyond the
// Grassmann arithmetic.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "supergeo/grassmann.hpp"
#include "supergeo/reduction.hpp"
#include "supergeo/supergeometry.hpp"

namespace oracle {

/// Sign of e_I e_J by counting transpositions of the label lists.
int bubble_sign(const std::vector<int>& a, const std::vector<int>& b);

/// Theta_{sur} from the definition with the graded slot rules.
supergeo::GrassmannValue theta(const supergeo::ChristoffelTable& gamma,
                               const supergeo::MetricValues& metric, int metric_parity,
                               int s, int u, int r, const supergeo::ChartSpec& chart);

struct DenseSolve {
  supergeo::ChristoffelTable gamma;
  double residual = 0.0;  // max |A z - b|
  long rank = 0;
  long unknowns = 0;
};

/// Solves torsion = 0 and Theta = 0 as one dense real least-squares system
/// in all Grassmann components of all Christoffel symbols.
DenseSolve dense_levi_civita(const supergeo::SuperMetric& g, std::span<const double> x);

/// Random element of Lambda_q with entries in [-1, 1]; `parity` 0/1 keeps only
/// that degree parity, -1 keeps everything.
supergeo::GrassmannValue random_value(std::mt19937_64& rng, int q, int parity = -1,
                                      double density = 0.7);

/// Classical Christoffel symbols of g^TE at y from central differences of
/// the metric values and Gaussian elimination, indexed (s*N + u)*N + r.
std::vector<double> finite_difference_levi_civita(const supergeo::ReducedMetric& g,
                                                  std::span<const double> y,
                                                  double step = 1e-5);

}  // namespace oracle
