#include "oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace oracle {

using supergeo::ChartSpec;
using supergeo::ChristoffelTable;
using supergeo::GrassmannValue;
using supergeo::MetricValues;
using supergeo::MultiIndex;

namespace {

int par(int s, const ChartSpec& chart) { return s >= chart.n ? 1 : 0; }
double sgn(int exponent) { return (exponent & 1) ? -1.0 : 1.0; }

}  // namespace

int bubble_sign(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> word = a;
  word.insert(word.end(), b.begin(), b.end());
  int swaps = 0;
  for (std::size_t i = 0; i < word.size(); ++i) {
    for (std::size_t j = 0; j + 1 < word.size() - i; ++j) {
      if (word[j] == word[j + 1]) return 0;
      if (word[j] > word[j + 1]) {
        std::swap(word[j], word[j + 1]);
        ++swaps;
      }
    }
  }
  for (std::size_t j = 0; j + 1 < word.size(); ++j) {
    if (word[j] == word[j + 1]) return 0;
  }
  return swaps % 2 ? -1 : 1;
}

GrassmannValue theta(const ChristoffelTable& gamma, const MetricValues& metric,
                     int metric_parity, int s, int u, int r, const ChartSpec& chart) {
  const int N = chart.total();
  const int pg = metric_parity;
  const int ps = par(s, chart);
  const int pu = par(u, chart);
  const int pr = par(r, chart);
  GrassmannValue out = sgn(pg * ps) * metric.derivative(s, u, r);
  for (int t = 0; t < N; ++t) {
    const int pt = par(t, chart);
    out -= sgn((ps + pu + pt) * pg) * (gamma(s, u, t) * metric.g(t, r));
    out -= sgn(ps * pu) * sgn((ps + pr + pt) * (pg + pu)) *
           (gamma(s, r, t) * metric.g(u, t));
  }
  return out;
}

DenseSolve dense_levi_civita(const supergeo::SuperMetric& g, std::span<const double> x) {
  const ChartSpec& chart = g.chart();
  const int N = chart.total();
  const int q = chart.q;
  const int masks = 1 << q;
  const MetricValues metric = g.evaluate(x);

  struct Unknown {
    int s, u, r;
    std::uint32_t mask;
  };
  std::vector<Unknown> unknowns;
  for (int s = 0; s < N; ++s) {
    for (int u = 0; u < N; ++u) {
      for (int r = 0; r < N; ++r) {
        const int p = (par(s, chart) + par(u, chart) + par(r, chart)) & 1;
        for (int m = 0; m < masks; ++m) {
          if ((std::popcount(static_cast<unsigned>(m)) & 1) == p) {
            unknowns.push_back({s, u, r, static_cast<std::uint32_t>(m)});
          }
        }
      }
    }
  }
  const long rows = 2L * N * N * N * masks;
  const long cols = static_cast<long>(unknowns.size());

  // residual(z) = A z + c, flattened: first torsion, then Theta
  const auto residual = [&](const ChristoffelTable& table) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(rows);
    long row = 0;
    for (int s = 0; s < N; ++s) {
      for (int u = 0; u < N; ++u) {
        for (int r = 0; r < N; ++r) {
          const GrassmannValue t =
              table(s, u, r) - sgn(par(s, chart) * par(u, chart)) * table(u, s, r);
          for (int m = 0; m < masks; ++m) {
            out(row++) = t.coefficient(MultiIndex::from_mask(static_cast<std::uint32_t>(m)));
          }
        }
      }
    }
    for (int s = 0; s < N; ++s) {
      for (int u = 0; u < N; ++u) {
        for (int r = 0; r < N; ++r) {
          const GrassmannValue th = oracle::theta(table, metric, g.parity(), s, u, r, chart);
          for (int m = 0; m < masks; ++m) {
            out(row++) = th.coefficient(MultiIndex::from_mask(static_cast<std::uint32_t>(m)));
          }
        }
      }
    }
    return out;
  };

  const ChristoffelTable zero(N, q);
  const Eigen::VectorXd c = residual(zero);
  Eigen::MatrixXd A(rows, cols);
  for (long j = 0; j < cols; ++j) {
    ChristoffelTable basis(N, q);
    const Unknown& k = unknowns[static_cast<std::size_t>(j)];
    basis(k.s, k.u, k.r) = GrassmannValue::monomial(q, MultiIndex::from_mask(k.mask), 1.0);
    A.col(j) = residual(basis) - c;
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  const Eigen::VectorXd z = qr.solve(-c);

  DenseSolve out{ChristoffelTable(N, q), 0.0, qr.rank(), cols};
  for (long j = 0; j < cols; ++j) {
    const Unknown& k = unknowns[static_cast<std::size_t>(j)];
    out.gamma(k.s, k.u, k.r) +=
        GrassmannValue::monomial(q, MultiIndex::from_mask(k.mask), z(j));
  }
  out.residual = (A * z + c).cwiseAbs().maxCoeff();
  return out;
}

GrassmannValue random_value(std::mt19937_64& rng, int q, int parity, double density) {
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  std::bernoulli_distribution keep(density);
  std::vector<GrassmannValue::Term> terms;
  for (std::uint32_t m = 0; m < (1U << q); ++m) {
    if (parity >= 0 && (std::popcount(m) & 1) != parity) continue;
    if (!keep(rng)) continue;
    terms.push_back({MultiIndex::from_mask(m), coeff(rng)});
  }
  return GrassmannValue::from_terms(q, terms);
}

namespace {

// Gaussian elimination with partial pivoting, one right-hand side.
std::vector<double> gauss_solve(std::vector<double> a, std::vector<double> b, int n) {
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int row = col + 1; row < n; ++row) {
      if (std::abs(a[row * n + col]) > std::abs(a[pivot * n + col])) pivot = row;
    }
    if (a[pivot * n + col] == 0.0) throw std::runtime_error("singular metric");
    for (int k = 0; k < n; ++k) std::swap(a[col * n + k], a[pivot * n + k]);
    std::swap(b[col], b[pivot]);
    for (int row = col + 1; row < n; ++row) {
      const double f = a[row * n + col] / a[col * n + col];
      for (int k = col; k < n; ++k) a[row * n + k] -= f * a[col * n + k];
      b[row] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (int row = n - 1; row >= 0; --row) {
    double v = b[row];
    for (int k = row + 1; k < n; ++k) v -= a[row * n + k] * x[k];
    x[row] = v / a[row * n + row];
  }
  return x;
}

}  // namespace

std::vector<double> finite_difference_levi_civita(const supergeo::ReducedMetric& g,
                                                  std::span<const double> y,
                                                  double step) {
  const int N = g.dim();
  // dg[(k*N + a)*N + b] = d_k g_ab
  std::vector<double> dg(static_cast<std::size_t>(N * N * N));
  for (int k = 0; k < N; ++k) {
    std::vector<double> plus(y.begin(), y.end());
    std::vector<double> minus(y.begin(), y.end());
    plus[k] += step;
    minus[k] -= step;
    const std::vector<double> gp = g.at(plus);
    const std::vector<double> gm = g.at(minus);
    for (int ab = 0; ab < N * N; ++ab) dg[k * N * N + ab] = (gp[ab] - gm[ab]) / (2 * step);
  }
  const std::vector<double> g0 = g.at(y);
  std::vector<double> out(static_cast<std::size_t>(N * N * N));
  for (int s = 0; s < N; ++s) {
    for (int u = 0; u < N; ++u) {
      std::vector<double> rhs(N);
      for (int k = 0; k < N; ++k) {
        rhs[k] = 0.5 * (dg[(s * N + u) * N + k] + dg[(u * N + s) * N + k] -
                        dg[(k * N + s) * N + u]);
      }
      const std::vector<double> gamma = gauss_solve(g0, rhs, N);
      for (int r = 0; r < N; ++r) out[(s * N + u) * N + r] = gamma[r];
    }
  }
  return out;
}

}  // namespace oracle
