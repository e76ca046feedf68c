#include "supergeo/supergeometry.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "supergeo/error.hpp"

namespace supergeo {

// ---------------------------------------------------------------------------
// CoordIndex

CoordIndex CoordIndex::from_flat(int s, const ChartSpec& chart) {
  if (s < 0 || s >= chart.total()) {
    throw DomainError("flat coordinate index " + std::to_string(s) +
                      " out of range");
  }
  return s < chart.n ? base(s + 1) : odd(s - chart.n + 1);
}

int CoordIndex::flat(const ChartSpec& chart) const {
  const int limit = kind == CoordKind::kBase ? chart.n : chart.q;
  if (index < 1 || index > limit) {
    throw DomainError("coordinate " + label() + " out of range for chart " +
                      std::to_string(chart.n) + "|" + std::to_string(chart.q));
  }
  return kind == CoordKind::kBase ? index - 1 : chart.n + index - 1;
}

std::string CoordIndex::label() const {
  return (kind == CoordKind::kBase ? "x" : "e") + std::to_string(index);
}

CoordIndex CoordIndex::parse(std::string_view label, const ChartSpec& chart) {
  if (label.size() < 2 || (label[0] != 'x' && label[0] != 'e')) {
    throw DomainError("coordinate label '" + std::string(label) +
                      "' must look like x<i> or e<alpha>");
  }
  int value = 0;
  for (char c : label.substr(1)) {
    if (c < '0' || c > '9') {
      throw DomainError("coordinate label '" + std::string(label) +
                        "' has a non-numeric index");
    }
    value = value * 10 + (c - '0');
    if (value > 1000) break;
  }
  CoordIndex out{label[0] == 'x' ? CoordKind::kBase : CoordKind::kOdd, value};
  (void)out.flat(chart);
  return out;
}

// ---------------------------------------------------------------------------
// SuperMetric

namespace {

int structural_parity(const SuperFunction& f) {
  const Parity p = f.parity();
  if (p == Parity::kMixed) return -1;
  return p == Parity::kOdd ? 1 : 0;
}

}  // namespace

SuperMetric::SuperMetric(ChartSpec chart, int parity,
                         std::vector<SuperFunction> coefficients)
    : chart_(std::move(chart)), parity_(parity),
      coefficients_(std::move(coefficients)) {
  chart_.validate();
  if (parity_ != 0 && parity_ != 1) {
    throw DomainError("metric parity must be 0 or 1");
  }
  if (parity_ == 0 && chart_.q % 2 != 0) {
    throw DomainError("even metric requires an even odd dimension q");
  }
  if (parity_ == 1 && chart_.n != chart_.q) {
    throw DomainError("odd metric requires n=q");
  }
  const int N = dim();
  if (static_cast<int>(coefficients_.size()) != N * N) {
    throw DimensionError("metric needs (n+q)^2 coefficients");
  }
  for (int r = 0; r < N; ++r) {
    for (int s = 0; s < N; ++s) {
      const SuperFunction& f = coefficient(r, s);
      if (!(f.chart() == chart_)) {
        throw DimensionError("metric coefficient on a different chart");
      }
      if (f.is_zero()) continue;
      const int expected = (parity_ + coord_parity(r, chart_) +
                            coord_parity(s, chart_)) & 1;
      const int actual = structural_parity(f);
      if (actual != expected) {
        throw DomainError("metric coefficient g(" +
                          CoordIndex::from_flat(r, chart_).label() + "," +
                          CoordIndex::from_flat(s, chart_).label() +
                          ") must be homogeneous of parity " +
                          std::to_string(expected));
      }
    }
  }
  base_derivatives_.resize(static_cast<std::size_t>(chart_.n));
  for (int i = 0; i < chart_.n; ++i) {
    auto& table = base_derivatives_[static_cast<std::size_t>(i)];
    table.reserve(coefficients_.size());
    for (const auto& f : coefficients_) table.push_back(dhat_base(f, i + 1));
  }
}

SuperMetric SuperMetric::from_entries(ChartSpec chart, int parity,
                                      const std::vector<Entry>& entries) {
  const int N = chart.total();
  std::vector<SuperFunction> coefficients(static_cast<std::size_t>(N * N),
                                          SuperFunction(chart));
  std::vector<bool> given(static_cast<std::size_t>(N * N), false);
  for (const auto& entry : entries) {
    if (entry.r < 0 || entry.r >= N || entry.s < 0 || entry.s >= N) {
      throw DomainError("metric entry index out of range");
    }
    const auto k = static_cast<std::size_t>(entry.r * N + entry.s);
    if (given[k]) throw DomainError("metric entry given twice");
    coefficients[k] = entry.value;
    given[k] = true;
  }
  for (int r = 0; r < N; ++r) {
    for (int s = 0; s < N; ++s) {
      const auto k = static_cast<std::size_t>(r * N + s);
      const auto partner = static_cast<std::size_t>(s * N + r);
      if (given[k] || !given[partner]) continue;
      const bool flip =
          (coord_parity(r, chart) & coord_parity(s, chart)) != 0;
      coefficients[k] = flip ? -coefficients[partner] : coefficients[partner];
    }
  }
  return SuperMetric(std::move(chart), parity, std::move(coefficients));
}

MetricValues SuperMetric::evaluate(std::span<const double> x) const {
  const int N = dim();
  MetricValues out{N, values(x), {}};
  out.dg.assign(static_cast<std::size_t>(N * N * N), GrassmannValue(chart_.q));
  for (int s = 0; s < N; ++s) {
    for (int u = 0; u < N; ++u) {
      for (int r = 0; r < N; ++r) {
        GrassmannValue& slot =
            out.dg[static_cast<std::size_t>((s * N + u) * N + r)];
        if (s < chart_.n) {
          slot = eval(base_derivatives_[static_cast<std::size_t>(s)]
                                       [static_cast<std::size_t>(u * N + r)],
                      x);
        } else {
          slot = left_derivative(s - chart_.n + 1, out.g(u, r));
        }
      }
    }
  }
  return out;
}

GrassmannMatrix SuperMetric::values(std::span<const double> x) const {
  const int N = dim();
  GrassmannMatrix g(static_cast<std::size_t>(N), static_cast<std::size_t>(N),
                    chart_.q);
  for (int r = 0; r < N; ++r) {
    for (int s = 0; s < N; ++s) {
      g(static_cast<std::size_t>(r), static_cast<std::size_t>(s)) =
          eval(coefficient(r, s), x);
    }
  }
  return g;
}

double SuperMetric::supersymmetry_violation(
    std::span<const std::vector<double>> points) const {
  const int N = dim();
  double worst = 0.0;
  for (const auto& x : points) {
    const GrassmannMatrix g = values(x);
    for (int r = 0; r < N; ++r) {
      for (int s = r; s < N; ++s) {
        const double sign = koszul_sign(coord_parity(r, chart_),
                                        coord_parity(s, chart_));
        const auto R = static_cast<std::size_t>(r);
        const auto S = static_cast<std::size_t>(s);
        worst = std::max(worst, (g(R, S) - sign * g(S, R)).max_abs());
      }
    }
  }
  return worst;
}

NondegeneracyReport metric_nondegenerate(
    const SuperMetric& g, std::span<const std::vector<double>> samples) {
  const int N = g.dim();
  NondegeneracyReport report;
  for (const auto& x : samples) {
    const GrassmannMatrix values = g.values(x);
    Eigen::MatrixXd body_matrix(N, N);
    for (int r = 0; r < N; ++r) {
      for (int s = 0; s < N; ++s) {
        body_matrix(r, s) = body(values(static_cast<std::size_t>(r),
                                        static_cast<std::size_t>(s)));
      }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(body_matrix);
    const auto& sv = svd.singularValues();
    const double largest = sv(0);
    const double smallest = sv(sv.size() - 1);
    double condition = std::numeric_limits<double>::infinity();
    if (smallest > 1e-12 * std::max(largest, 1.0)) condition = largest / smallest;
    if (!std::isfinite(condition)) report.nondegenerate = false;
    report.worst_condition = std::max(report.worst_condition, condition);
    report.condition_numbers.push_back(condition);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Connections

ChristoffelTable::ChristoffelTable(int dim, int q)
    : dim_(dim), q_(q),
      data_(static_cast<std::size_t>(dim * dim * dim), GrassmannValue(q)) {}

SuperConnection::SuperConnection(ChartSpec chart,
                                 std::vector<SuperFunction> symbols,
                                 PointwiseField field)
    : chart_(std::move(chart)), symbols_(std::move(symbols)),
      field_(std::move(field)) {}

SuperConnection SuperConnection::symbolic(ChartSpec chart,
                                          std::vector<SuperFunction> symbols) {
  chart.validate();
  const int N = chart.total();
  if (static_cast<int>(symbols.size()) != N * N * N) {
    throw DimensionError("connection needs (n+q)^3 Christoffel symbols");
  }
  for (int s = 0; s < N; ++s) {
    for (int u = 0; u < N; ++u) {
      for (int r = 0; r < N; ++r) {
        const SuperFunction& f =
            symbols[static_cast<std::size_t>((s * N + u) * N + r)];
        if (!(f.chart() == chart)) {
          throw DimensionError("Christoffel symbol on a different chart");
        }
        if (f.is_zero()) continue;
        const int expected = (coord_parity(s, chart) + coord_parity(u, chart) +
                              coord_parity(r, chart)) & 1;
        if (structural_parity(f) != expected) {
          throw DomainError(
              "Christoffel symbol Gamma^" +
              CoordIndex::from_flat(r, chart).label() + "_{" +
              CoordIndex::from_flat(s, chart).label() + "," +
              CoordIndex::from_flat(u, chart).label() +
              "} must be homogeneous of parity " + std::to_string(expected));
        }
      }
    }
  }
  return SuperConnection(std::move(chart), std::move(symbols), nullptr);
}

SuperConnection SuperConnection::pointwise(ChartSpec chart, PointwiseField field) {
  chart.validate();
  if (!field) throw DomainError("pointwise connection needs a field");
  return SuperConnection(std::move(chart), {}, std::move(field));
}

SuperConnection SuperConnection::flat(ChartSpec chart) {
  const int N = chart.total();
  std::vector<SuperFunction> symbols(static_cast<std::size_t>(N * N * N),
                                     SuperFunction(chart));
  return symbolic(std::move(chart), std::move(symbols));
}

const SuperFunction& SuperConnection::symbol(int s, int u, int r) const {
  if (!is_symbolic()) {
    throw DomainError("pointwise connection has no symbolic Christoffel symbols");
  }
  const int N = dim();
  return symbols_[static_cast<std::size_t>((s * N + u) * N + r)];
}

ChristoffelTable SuperConnection::at(std::span<const double> x) const {
  if (!is_symbolic()) return field_(x);
  const int N = dim();
  ChristoffelTable table(N, chart_.q);
  for (int s = 0; s < N; ++s) {
    for (int u = 0; u < N; ++u) {
      for (int r = 0; r < N; ++r) table(s, u, r) = eval(symbol(s, u, r), x);
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Torsion and compatibility

std::vector<GrassmannValue> torsion(const ChristoffelTable& gamma, int s, int u,
                                    const ChartSpec& chart) {
  const int N = gamma.dim();
  const double sign = koszul_sign(coord_parity(s, chart), coord_parity(u, chart));
  std::vector<GrassmannValue> out;
  out.reserve(static_cast<std::size_t>(N));
  for (int r = 0; r < N; ++r) {
    out.push_back(gamma(s, u, r) - sign * gamma(u, s, r));
  }
  return out;
}

std::vector<GrassmannValue> torsion(const SuperConnection& connection,
                                    CoordIndex s, CoordIndex u,
                                    std::span<const double> x) {
  const ChartSpec& chart = connection.chart();
  return torsion(connection.at(x), s.flat(chart), u.flat(chart), chart);
}

double max_torsion(const ChristoffelTable& gamma, const ChartSpec& chart) {
  double worst = 0.0;
  for (int s = 0; s < gamma.dim(); ++s) {
    for (int u = s; u < gamma.dim(); ++u) {
      for (const auto& v : torsion(gamma, s, u, chart)) {
        worst = std::max(worst, v.max_abs());
      }
    }
  }
  return worst;
}

GrassmannValue theta(const ChristoffelTable& gamma, const MetricValues& metric,
                     int metric_parity, int s, int u, int r,
                     const ChartSpec& chart) {
  const int N = gamma.dim();
  const int ps = coord_parity(s, chart);
  const int pu = coord_parity(u, chart);
  const int pr = coord_parity(r, chart);
  GrassmannValue out =
      koszul_sign(metric_parity, ps) * metric.derivative(s, u, r);
  for (int t = 0; t < N; ++t) {
    const auto T = static_cast<std::size_t>(t);
    const int pt = coord_parity(t, chart);
    // g(Gamma^t_{su} d_t, d_r) = (-1)^{|Gamma||g|} Gamma^t_{su} g_{tr}
    const int parity_su = (ps + pu + pt) & 1;
    out -= koszul_sign(parity_su, metric_parity) *
           (gamma(s, u, t) * metric.g(T, static_cast<std::size_t>(r)));
    // g(d_u, Gamma^t_{sr} d_t) = (-1)^{|Gamma|(|g|+|u|)} Gamma^t_{sr} g_{ut}
    const int parity_sr = (ps + pr + pt) & 1;
    out -= koszul_sign(ps, pu) * koszul_sign(parity_sr, metric_parity + pu) *
           (gamma(s, r, t) * metric.g(static_cast<std::size_t>(u), T));
  }
  return out;
}

GrassmannValue theta(const SuperConnection& connection, const SuperMetric& g,
                     CoordIndex s, CoordIndex u, CoordIndex r,
                     std::span<const double> x) {
  const ChartSpec& chart = connection.chart();
  if (!(chart == g.chart())) {
    throw DimensionError("connection and metric live on different charts");
  }
  return theta(connection.at(x), g.evaluate(x), g.parity(), s.flat(chart),
               u.flat(chart), r.flat(chart), chart);
}

double max_theta(const ChristoffelTable& gamma, const MetricValues& metric,
                 int metric_parity, const ChartSpec& chart) {
  double worst = 0.0;
  const int N = gamma.dim();
  for (int s = 0; s < N; ++s) {
    for (int u = 0; u < N; ++u) {
      for (int r = 0; r < N; ++r) {
        worst = std::max(
            worst,
            theta(gamma, metric, metric_parity, s, u, r, chart).max_abs());
      }
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Levi-Civita

namespace {

ChristoffelTable solve_levi_civita(const SuperMetric& g, const MetricValues& m) {
  const ChartSpec& chart = g.chart();
  const int N = g.dim();
  const int q = chart.q;
  const auto parity_of = [&](int k) { return coord_parity(k, chart); };

  // D_{s,ur} = (-1)^{|g||s|} d_s g_{ur}
  const auto D = [&](int s, int u, int r) {
    return koszul_sign(g.parity(), parity_of(s)) * m.derivative(s, u, r);
  };

  // Sum_t Gamma^t_{su} g_{tr} = A_{sur}, solved with the two-sided inverse.
  const GrassmannMatrix g_inverse = inverse(m.g);

  ChristoffelTable gamma(N, q);
  std::vector<GrassmannValue> lowered(static_cast<std::size_t>(N),
                                      GrassmannValue(q));
  for (int s = 0; s < N; ++s) {
    for (int u = s; u < N; ++u) {
      const int ps = parity_of(s);
      const int pu = parity_of(u);
      for (int r = 0; r < N; ++r) {
        const int pr = parity_of(r);
        // graded cyclic combination of the compatibility equations
        GrassmannValue a = D(s, u, r);
        a += koszul_sign(ps, pu) * D(u, s, r);
        a -= koszul_sign(pr, ps + pu) * D(r, s, u);
        lowered[static_cast<std::size_t>(r)] = 0.5 * a;
      }
      const double swap_sign = koszul_sign(ps, pu);
      for (int t = 0; t < N; ++t) {
        // an odd metric moves Gamma past g on the left slot
        GrassmannValue value(q);
        for (int r = 0; r < N; ++r) {
          value += lowered[static_cast<std::size_t>(r)] *
                   g_inverse(static_cast<std::size_t>(r),
                             static_cast<std::size_t>(t));
        }
        value *= koszul_sign(g.parity(), ps + pu + parity_of(t));
        gamma(u, s, t) = swap_sign * value;
        gamma(s, u, t) = std::move(value);
      }
    }
  }
  return gamma;
}

}  // namespace

ChristoffelTable levi_civita_unchecked(const SuperMetric& g,
                                       std::span<const double> x) {
  return solve_levi_civita(g, g.evaluate(x));
}

ChristoffelTable levi_civita_at(const SuperMetric& g, std::span<const double> x) {
  const MetricValues m = g.evaluate(x);
  ChristoffelTable gamma = solve_levi_civita(g, m);
  const double t = max_torsion(gamma, g.chart());
  const double c = max_theta(gamma, m, g.parity(), g.chart());
  if (t > kLeviCivitaSelfCheckTolerance || c > kLeviCivitaSelfCheckTolerance) {
    throw ConsistencyError("Levi-Civita solve failed verification: torsion " +
                           std::to_string(t) + ", compatibility " +
                           std::to_string(c));
  }
  return gamma;
}

SuperConnection levi_civita(const SuperMetric& g,
                            std::span<const std::vector<double>> check_points) {
  for (const auto& x : check_points) (void)levi_civita_at(g, x);
  auto metric = std::make_shared<const SuperMetric>(g);
  return SuperConnection::pointwise(
      g.chart(), [metric](std::span<const double> x) {
        return levi_civita_unchecked(*metric, x);
      });
}

}  // namespace supergeo
