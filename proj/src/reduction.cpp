#include "supergeo/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "supergeo/error.hpp"

namespace supergeo {

namespace {

enum class Block { kBBB, kBBO, kBOO, kOBO, kOther };

Block block_of(int s, int u, int r, const ChartSpec& chart) {
  const int ps = coord_parity(s, chart);
  const int pu = coord_parity(u, chart);
  const int pr = coord_parity(r, chart);
  if (ps == 0 && pu == 0) return pr == 0 ? Block::kBBB : Block::kBBO;
  if (pr == 1 && ps == 0 && pu == 1) return Block::kBOO;
  if (pr == 1 && ps == 1 && pu == 0) return Block::kOBO;
  return Block::kOther;
}

double eval_or_zero(const Expr& e, std::span<const double> x) {
  return e.is_zero() ? 0.0 : eval(e, x);
}

FiberAffineValue evaluate(const FiberAffineChristoffel& c,
                          std::span<const double> x) {
  FiberAffineValue v;
  v.constant = eval_or_zero(c.constant_part, x);
  if (!c.linear_part.empty()) {
    v.linear.resize(c.linear_part.size());
    for (std::size_t b = 0; b < c.linear_part.size(); ++b) {
      v.linear[b] = eval_or_zero(c.linear_part[b], x);
    }
  }
  return v;
}

std::span<const double> base_part(std::span<const double> y, const ChartSpec& chart) {
  if (static_cast<int>(y.size()) != chart.total()) {
    throw DimensionError("point of E needs " + std::to_string(chart.total()) +
                         " coordinates, got " + std::to_string(y.size()));
  }
  return y.first(static_cast<std::size_t>(chart.n));
}

std::span<const double> fiber_part(std::span<const double> y, const ChartSpec& chart) {
  return y.subspan(static_cast<std::size_t>(chart.n));
}

std::vector<double> dense(const ReducedTable& table, std::span<const double> e) {
  std::vector<double> out(table.entries.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = table.entries[k].at(e);
  return out;
}

}  // namespace

bool FiberAffineChristoffel::is_zero() const {
  return constant_part.is_zero() &&
         std::all_of(linear_part.begin(), linear_part.end(),
                     [](const Expr& e) { return e.is_zero(); });
}

double FiberAffineValue::at(std::span<const double> e) const {
  double v = constant;
  for (std::size_t b = 0; b < linear.size(); ++b) v += linear[b] * e[b];
  return v;
}

bool FiberAffineValue::is_zero() const {
  return constant == 0.0 &&
         std::all_of(linear.begin(), linear.end(), [](double v) { return v == 0.0; });
}

// ---------------------------------------------------------------------------
// ReducedConnection

ReducedConnection::ReducedConnection(ChartSpec chart,
                                     std::vector<FiberAffineChristoffel> symbols)
    : chart_(std::move(chart)), symbols_(std::move(symbols)) {
  const auto N = static_cast<std::size_t>(chart_.total());
  if (symbols_.size() != N * N * N) {
    throw DimensionError("reduced connection needs N^3 symbols");
  }
}

ReducedConnection::ReducedConnection(ChartSpec chart, PointwiseField field)
    : chart_(std::move(chart)), field_(std::move(field)) {}

const FiberAffineChristoffel& ReducedConnection::symbol(int s, int u, int r) const {
  if (!is_symbolic()) throw DomainError("reduced connection is pointwise");
  return symbols_[static_cast<std::size_t>((s * dim() + u) * dim() + r)];
}

ReducedTable ReducedConnection::table(std::span<const double> x) const {
  if (!is_symbolic()) return field_(x);
  ReducedTable t{dim(), std::vector<FiberAffineValue>(symbols_.size())};
  for (std::size_t k = 0; k < symbols_.size(); ++k) {
    if (!symbols_[k].is_zero()) t.entries[k] = evaluate(symbols_[k], x);
  }
  return t;
}

std::vector<double> ReducedConnection::at(std::span<const double> y) const {
  return dense(table(base_part(y, chart_)), fiber_part(y, chart_));
}

ReducedConnection ReducedConnection::with_symbol(int s, int u, int r,
                                                 FiberAffineChristoffel value) const {
  const auto k = static_cast<std::size_t>((s * dim() + u) * dim() + r);
  if (is_symbolic()) {
    auto symbols = symbols_;
    symbols[k] = std::move(value);
    return ReducedConnection(chart_, std::move(symbols));
  }
  auto field = field_;
  return ReducedConnection(chart_, [field, k, value](std::span<const double> x) {
    ReducedTable t = field(x);
    t.entries[k] = evaluate(value, x);
    return t;
  });
}

ReducedTable reduce_table(const ChristoffelTable& gamma, const ChartSpec& chart) {
  const int N = chart.total();
  ReducedTable t{N, std::vector<FiberAffineValue>(static_cast<std::size_t>(N * N * N))};
  for (int s = 0; s < N; ++s) {
    for (int u = 0; u < N; ++u) {
      for (int r = 0; r < N; ++r) {
        const GrassmannValue& v = gamma(s, u, r);
        FiberAffineValue& out = t(s, u, r);
        switch (block_of(s, u, r, chart)) {
          case Block::kBBB:
          case Block::kBOO:
          case Block::kOBO:
            out.constant = body(v);
            break;
          case Block::kBBO:
            out.linear.resize(static_cast<std::size_t>(chart.q));
            for (int b = 1; b <= chart.q; ++b) {
              out.linear[static_cast<std::size_t>(b - 1)] = body(left_derivative(b, v));
            }
            break;
          case Block::kOther:
            break;
        }
      }
    }
  }
  return t;
}

ReducedConnection reduce_connection(const SuperConnection& connection) {
  const ChartSpec chart = connection.chart();
  if (!connection.is_symbolic()) {
    return ReducedConnection(chart, [connection](std::span<const double> x) {
      return reduce_table(connection.at(x), connection.chart());
    });
  }
  const int N = chart.total();
  std::vector<FiberAffineChristoffel> symbols(static_cast<std::size_t>(N * N * N));
  for (int s = 0; s < N; ++s) {
    for (int u = 0; u < N; ++u) {
      for (int r = 0; r < N; ++r) {
        const SuperFunction& f = connection.symbol(s, u, r);
        auto& out = symbols[static_cast<std::size_t>((s * N + u) * N + r)];
        switch (block_of(s, u, r, chart)) {
          case Block::kBBB:
          case Block::kBOO:
          case Block::kOBO:
            out.constant_part = reduce(f);
            break;
          case Block::kBBO:
            out.linear_part.resize(static_cast<std::size_t>(chart.q));
            for (int b = 1; b <= chart.q; ++b) {
              out.linear_part[static_cast<std::size_t>(b - 1)] =
                  reduce(dhat_odd(f, b));
            }
            break;
          case Block::kOther:
            break;
        }
      }
    }
  }
  return ReducedConnection(chart, std::move(symbols));
}

// ---------------------------------------------------------------------------
// ReducedMetric

ReducedMetric::ReducedMetric(ChartSpec chart, int parity_origin,
                             std::vector<FiberAffineChristoffel> coefficients)
    : chart_(std::move(chart)),
      parity_origin_(parity_origin),
      coefficients_(std::move(coefficients)) {
  const auto N = static_cast<std::size_t>(chart_.total());
  if (coefficients_.size() != N * N) {
    throw DimensionError("reduced metric needs N^2 coefficients");
  }
  base_derivatives_.resize(static_cast<std::size_t>(chart_.n));
  for (int i = 1; i <= chart_.n; ++i) {
    auto& table = base_derivatives_[static_cast<std::size_t>(i - 1)];
    table.reserve(coefficients_.size());
    for (const auto& c : coefficients_) {
      FiberAffineChristoffel d;
      d.constant_part = diff(c.constant_part, i);
      for (const auto& l : c.linear_part) d.linear_part.push_back(diff(l, i));
      table.push_back(std::move(d));
    }
  }
}

std::vector<double> ReducedMetric::at(std::span<const double> y) const {
  const auto x = base_part(y, chart_);
  const auto e = fiber_part(y, chart_);
  std::vector<double> out(coefficients_.size(), 0.0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (!coefficients_[k].is_zero()) out[k] = evaluate(coefficients_[k], x).at(e);
  }
  return out;
}

std::vector<double> ReducedMetric::derivatives(std::span<const double> y) const {
  const auto x = base_part(y, chart_);
  const auto e = fiber_part(y, chart_);
  const int N = dim();
  const auto NN = static_cast<std::size_t>(N * N);
  std::vector<double> out(NN * static_cast<std::size_t>(N), 0.0);
  for (int s = 0; s < N; ++s) {
    for (std::size_t k = 0; k < NN; ++k) {
      double v = 0.0;
      if (s < chart_.n) {
        const auto& d = base_derivatives_[static_cast<std::size_t>(s)][k];
        if (!d.is_zero()) v = evaluate(d, x).at(e);
      } else {
        const auto& lin = coefficients_[k].linear_part;
        const auto b = static_cast<std::size_t>(s - chart_.n);
        if (b < lin.size()) v = eval_or_zero(lin[b], x);
      }
      out[static_cast<std::size_t>(s) * NN + k] = v;
    }
  }
  return out;
}

ReducedMetric reduce_metric(const SuperMetric& g) {
  const ChartSpec& chart = g.chart();
  const int N = chart.total();
  std::vector<FiberAffineChristoffel> coefficients(static_cast<std::size_t>(N * N));
  for (int s = 0; s < N; ++s) {
    for (int u = 0; u < N; ++u) {
      auto& out = coefficients[static_cast<std::size_t>(s * N + u)];
      const int ps = coord_parity(s, chart);
      const int pu = coord_parity(u, chart);
      const SuperFunction& f = g.coefficient(s, u);
      if (g.parity() == 0) {
        if (ps == 0 && pu == 0) out.constant_part = reduce(f);
        continue;
      }
      if (ps == 0 && pu == 0) {
        out.linear_part.resize(static_cast<std::size_t>(chart.q));
        for (int b = 1; b <= chart.q; ++b) {
          out.linear_part[static_cast<std::size_t>(b - 1)] = reduce(dhat_odd(f, b));
        }
      } else if (ps != pu) {
        out.constant_part = neg(reduce(f));
      }
    }
  }
  return ReducedMetric(chart, g.parity(), std::move(coefficients));
}

// ---------------------------------------------------------------------------
// Classical checks on E

ViolationReport reduced_torsion_check(const ReducedConnection& connection,
                                      std::span<const std::vector<double>> samples) {
  const int N = connection.dim();
  ViolationReport report;
  for (const auto& y : samples) {
    const std::vector<double> G = connection.at(y);
    for (int s = 0; s < N; ++s) {
      for (int u = s + 1; u < N; ++u) {
        for (int k = 0; k < N; ++k) {
          const double t = G[static_cast<std::size_t>((s * N + u) * N + k)] -
                           G[static_cast<std::size_t>((u * N + s) * N + k)];
          report.max_violation = std::max(report.max_violation, std::abs(t));
        }
      }
    }
    ++report.samples;
  }
  return report;
}

ViolationReport reduced_compat_check(const ReducedConnection& connection,
                                     const ReducedMetric& metric,
                                     std::span<const std::vector<double>> samples) {
  const int N = connection.dim();
  const auto idx = [N](int a, int b) { return static_cast<std::size_t>(a * N + b); };
  const auto idx3 = [N](int a, int b, int c) {
    return static_cast<std::size_t>((a * N + b) * N + c);
  };
  ViolationReport report;
  for (const auto& y : samples) {
    const std::vector<double> G = connection.at(y);
    const std::vector<double> g = metric.at(y);
    const std::vector<double> dg = metric.derivatives(y);
    for (int s = 0; s < N; ++s) {
      for (int u = 0; u < N; ++u) {
        for (int r = 0; r < N; ++r) {
          double theta = dg[idx3(s, u, r)];
          for (int t = 0; t < N; ++t) {
            theta -= G[idx3(s, u, t)] * g[idx(t, r)] + G[idx3(s, r, t)] * g[idx(u, t)];
          }
          report.max_violation = std::max(report.max_violation, std::abs(theta));
        }
      }
    }
    ++report.samples;
  }
  return report;
}

std::vector<double> classical_levi_civita(const ReducedMetric& metric,
                                          std::span<const double> y) {
  if (metric.parity_origin() != 1) {
    throw DomainError("g^TE of an even metric is degenerate; no Levi-Civita connection");
  }
  const int N = metric.dim();
  const std::vector<double> g = metric.at(y);
  const std::vector<double> dg = metric.derivatives(y);
  const auto d = [&](int s, int u, int r) {
    return dg[static_cast<std::size_t>((s * N + u) * N + r)];
  };
  Eigen::MatrixXd G(N, N);
  for (int a = 0; a < N; ++a) {
    for (int b = 0; b < N; ++b) G(a, b) = g[static_cast<std::size_t>(a * N + b)];
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
  if (!lu.isInvertible()) throw NotInvertibleError("g^TE is singular");
  // lowered(r, (s,u)) = (d_s g_ur + d_u g_sr - d_r g_su) / 2
  Eigen::MatrixXd lowered(N, N * N);
  for (int s = 0; s < N; ++s) {
    for (int u = 0; u < N; ++u) {
      for (int r = 0; r < N; ++r) {
        lowered(r, s * N + u) = 0.5 * (d(s, u, r) + d(u, s, r) - d(r, s, u));
      }
    }
  }
  const Eigen::MatrixXd raised = lu.solve(lowered);
  std::vector<double> out(static_cast<std::size_t>(N * N * N));
  for (int s = 0; s < N; ++s) {
    for (int u = 0; u < N; ++u) {
      for (int t = 0; t < N; ++t) {
        out[static_cast<std::size_t>((s * N + u) * N + t)] = raised(t, s * N + u);
      }
    }
  }
  return out;
}

ViolationReport levi_civita_preservation(const ReducedConnection& connection,
                                         const ReducedMetric& metric,
                                         std::span<const std::vector<double>> samples) {
  ViolationReport report;
  for (const auto& y : samples) {
    const std::vector<double> a = connection.at(y);
    const std::vector<double> b = classical_levi_civita(metric, y);
    for (std::size_t k = 0; k < a.size(); ++k) {
      report.max_violation = std::max(report.max_violation, std::abs(a[k] - b[k]));
    }
    ++report.samples;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Structure

StructureReport reduction_structure_check(const SuperConnection& connection,
                                          const ReducedConnection& reduced,
                                          const SuperMetric* metric,
                                          const ReducedMetric* reduced_metric,
                                          std::span<const std::vector<double>> base_samples) {
  const ChartSpec& chart = connection.chart();
  const int N = chart.total();
  StructureReport report;
  const auto note = [&](std::size_t& counter, std::string message) {
    if (counter++ == 0 && report.messages.size() < 8) {
      report.messages.push_back(std::move(message));
    }
  };
  const auto where = [&](int s, int u, int r) {
    return CoordIndex::from_flat(r, chart).label() + " over (" +
           CoordIndex::from_flat(s, chart).label() + "," +
           CoordIndex::from_flat(u, chart).label() + ")";
  };
  for (const auto& x : base_samples) {
    const ChristoffelTable super = connection.at(x);
    const ReducedTable t = reduced.table(x);
    for (int s = 0; s < N; ++s) {
      for (int u = 0; u < N; ++u) {
        for (int r = 0; r < N; ++r) {
          const FiberAffineValue& v = t(s, u, r);
          const GrassmannValue& w = super(s, u, r);
          const bool has_linear = std::any_of(v.linear.begin(), v.linear.end(),
                                              [](double c) { return c != 0.0; });
          switch (block_of(s, u, r, chart)) {
            case Block::kOther:
              if (!v.is_zero()) note(report.pattern_failures, "nonzero " + where(s, u, r));
              break;
            case Block::kBBO:
              if (v.constant != 0.0) {
                note(report.pattern_failures, "constant part in " + where(s, u, r));
              }
              for (int b = 1; b <= chart.q; ++b) {
                const double c = v.linear.empty()
                                     ? 0.0
                                     : v.linear[static_cast<std::size_t>(b - 1)];
                if (c != body(left_derivative(b, w))) {
                  note(report.formula_failures, "fiber slope of " + where(s, u, r));
                }
              }
              break;
            default:
              if (has_linear) {
                note(report.pattern_failures, "fiber dependence in " + where(s, u, r));
              }
              if (v.constant != body(w)) {
                note(report.formula_failures, "body mismatch in " + where(s, u, r));
              }
              break;
          }
        }
      }
    }
    if (metric != nullptr && reduced_metric != nullptr) {
      const GrassmannMatrix gv = metric->values(x);
      for (int s = 0; s < N; ++s) {
        for (int u = 0; u < N; ++u) {
          const FiberAffineValue v = evaluate(reduced_metric->coefficient(s, u), x);
          const GrassmannValue& w = gv(static_cast<std::size_t>(s),
                                       static_cast<std::size_t>(u));
          const int ps = coord_parity(s, chart);
          const int pu = coord_parity(u, chart);
          std::vector<double> want_linear;
          double want_constant = 0.0;
          if (metric->parity() == 0) {
            if (ps == 0 && pu == 0) want_constant = body(w);
          } else if (ps == 0 && pu == 0) {
            for (int b = 1; b <= chart.q; ++b) {
              want_linear.push_back(body(left_derivative(b, w)));
            }
          } else if (ps != pu) {
            want_constant = -body(w);
          }
          const auto linear_at = [](const std::vector<double>& l, std::size_t b) {
            return b < l.size() ? l[b] : 0.0;
          };
          bool same = v.constant == want_constant;
          for (std::size_t b = 0; b < static_cast<std::size_t>(chart.q); ++b) {
            same = same && linear_at(v.linear, b) == linear_at(want_linear, b);
          }
          if (!same) {
            note(report.metric_failures,
                 "g^TE(" + CoordIndex::from_flat(s, chart).label() + "," +
                     CoordIndex::from_flat(u, chart).label() + ")");
          }
        }
      }
    }
    ++report.samples;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Bundle data on M and E

std::vector<double> AppendixAReduction::bundle_connection(std::span<const double> x) const {
  const ChristoffelTable t = connection.at(x);
  const int n = chart.n;
  const int q = chart.q;
  std::vector<double> out(static_cast<std::size_t>(n * q * q));
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < q; ++a) {
      for (int c = 0; c < q; ++c) {
        out[static_cast<std::size_t>((i * q + a) * q + c)] = body(t(i, n + a, n + c));
      }
    }
  }
  return out;
}

AppendixAReduction appendix_a_reduce(const SuperConnection& connection,
                                     const SuperMetric& g) {
  const ChartSpec& chart = g.chart();
  if (!(chart == connection.chart())) {
    throw DimensionError("connection and metric live on different charts");
  }
  const int n = chart.n;
  const int q = chart.q;
  AppendixAReduction out{chart, g.parity(), {}, {}, {}, connection};
  if (g.parity() == 0) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) out.base_metric.push_back(reduce(g.coefficient(i, j)));
    }
    for (int a = 0; a < q; ++a) {
      for (int b = 0; b < q; ++b) {
        out.two_form.push_back(reduce(g.coefficient(n + a, n + b)));
      }
    }
  } else {
    for (int a = 0; a < q; ++a) {
      for (int i = 0; i < n; ++i) out.bundle_iso.push_back(reduce(g.coefficient(n + a, i)));
    }
  }
  return out;
}

namespace {

double condition_number(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  const double smallest = sv(sv.size() - 1);
  if (smallest == 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / smallest;
}

Eigen::MatrixXd evaluate_table(const std::vector<Expr>& table, int rows, int cols,
                               std::span<const double> x) {
  Eigen::MatrixXd m(rows, cols);
  for (int a = 0; a < rows; ++a) {
    for (int b = 0; b < cols; ++b) {
      m(a, b) = eval_or_zero(table[static_cast<std::size_t>(a * cols + b)], x);
    }
  }
  return m;
}

}  // namespace

AppendixAReport appendix_a_check(const AppendixAReduction& reduction,
                                 const ReducedConnection& reduced,
                                 std::span<const std::vector<double>> base_samples) {
  const int n = reduction.chart.n;
  const int q = reduction.chart.q;
  AppendixAReport report;
  for (const auto& x : base_samples) {
    if (reduction.parity == 0) {
      const Eigen::MatrixXd w = evaluate_table(reduction.two_form, q, q, x);
      report.antisymmetry_violation =
          std::max(report.antisymmetry_violation, (w + w.transpose()).cwiseAbs().maxCoeff());
      const double c = condition_number(w);
      report.worst_two_form_condition = std::max(report.worst_two_form_condition, c);
      if (!std::isfinite(c)) report.degenerate = true;
    } else {
      const Eigen::MatrixXd b = evaluate_table(reduction.bundle_iso, q, n, x);
      const double c = condition_number(b);
      report.worst_iso_condition = std::max(report.worst_iso_condition, c);
      if (!std::isfinite(c)) report.degenerate = true;
    }
    const std::vector<double> nabla_e = reduction.bundle_connection(x);
    const ReducedTable t = reduced.table(x);
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < q; ++a) {
        for (int c = 0; c < q; ++c) {
          const double diff = std::abs(
              nabla_e[static_cast<std::size_t>((i * q + a) * q + c)] -
              t(i, n + a, n + c).constant);
          report.bundle_connection_mismatch =
              std::max(report.bundle_connection_mismatch, diff);
        }
      }
    }
    ++report.samples;
  }
  return report;
}

std::vector<double> zero_section_pullback(const ReducedConnection& reduced,
                                          std::span<const double> x) {
  const int n = reduced.chart().n;
  const ReducedTable t = reduced.table(x);
  std::vector<double> out(static_cast<std::size_t>(n * n * n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        // fiber part is zero on the zero section
        out[static_cast<std::size_t>((i * n + j) * n + k)] = t(i, j, k).constant;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Frame changes

namespace {

struct FrameData {
  int q = 0;
  int n = 0;
  std::vector<double> G;                // (a, b)
  std::vector<std::vector<double>> dG;  // [i](a, b)
  std::vector<double> ddG;              // ((i*n + j)*q + a)*q + b
};

class Frame {
 public:
  Frame(const ChartSpec& chart, const std::vector<Expr>& entries)
      : n_(chart.n), q_(chart.q), G_(entries) {
    if (static_cast<int>(G_.size()) != q_ * q_) {
      throw DimensionError("frame change needs q x q entries");
    }
    dG_.resize(static_cast<std::size_t>(n_));
    ddG_.resize(static_cast<std::size_t>(n_ * n_));
    for (int i = 0; i < n_; ++i) {
      for (const Expr& e : G_) dG_[static_cast<std::size_t>(i)].push_back(diff(e, i + 1));
    }
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        for (const Expr& e : dG_[static_cast<std::size_t>(i)]) {
          ddG_[static_cast<std::size_t>(i * n_ + j)].push_back(diff(e, j + 1));
        }
      }
    }
  }

  FrameData at(std::span<const double> x) const {
    FrameData d{q_, n_, {}, {}, {}};
    for (const Expr& e : G_) d.G.push_back(eval_or_zero(e, x));
    for (const auto& row : dG_) {
      d.dG.emplace_back();
      for (const Expr& e : row) d.dG.back().push_back(eval_or_zero(e, x));
    }
    for (const auto& row : ddG_) {
      for (const Expr& e : row) d.ddG.push_back(eval_or_zero(e, x));
    }
    return d;
  }

 private:
  int n_;
  int q_;
  std::vector<Expr> G_;
  std::vector<std::vector<Expr>> dG_;
  std::vector<std::vector<Expr>> ddG_;
};

// Shared shape of the Jacobian J_{as} = d'_a(q_s) and of d'_a J_{bs}, with
// the primed fiber coordinates supplied as either Grassmann generators or
// real numbers.
template <typename Scalar, typename MakeScalar>
struct JacobianBuilder {
  const FrameData& f;
  std::vector<Scalar> fiber;  // e'_b
  MakeScalar make;

  double G(int a, int b) const { return f.G[static_cast<std::size_t>(a * f.q + b)]; }
  double dG(int i, int a, int b) const {
    return f.dG[static_cast<std::size_t>(i)][static_cast<std::size_t>(a * f.q + b)];
  }
  double ddG(int i, int j, int a, int b) const {
    return f.ddG[static_cast<std::size_t>(((i * f.n + j) * f.q + a) * f.q + b)];
  }

  Scalar J(int a, int s) const {
    const int n = f.n;
    if (a < n) {
      if (s < n) return make(a == s ? 1.0 : 0.0);
      Scalar v = make(0.0);
      for (int b = 0; b < f.q; ++b) v += dG(a, s - n, b) * fiber[static_cast<std::size_t>(b)];
      return v;
    }
    if (s < n) return make(0.0);
    return make(G(s - n, a - n));
  }

  // d'_a (J_{bs})
  Scalar dJ(int a, int b, int s) const {
    const int n = f.n;
    if (s < n) return make(0.0);
    if (a < n) {
      if (b < n) {
        Scalar v = make(0.0);
        for (int c = 0; c < f.q; ++c) {
          v += ddG(b, a, s - n, c) * fiber[static_cast<std::size_t>(c)];
        }
        return v;
      }
      return make(dG(a, s - n, b - n));
    }
    if (b < n) return make(dG(b, s - n, a - n));
    return make(0.0);
  }
};

}  // namespace

ChristoffelTable transform_connection(const SuperConnection& connection,
                                      const std::vector<Expr>& frame,
                                      std::span<const double> x) {
  const ChartSpec& chart = connection.chart();
  const int q = chart.q;
  const int N = chart.total();
  const FrameData f = Frame(chart, frame).at(x);

  std::vector<GrassmannValue> primed;
  for (int b = 1; b <= q; ++b) primed.push_back(GrassmannValue::generator(q, b));
  const auto make = [q](double c) { return GrassmannValue::scalar(q, c); };
  JacobianBuilder<GrassmannValue, decltype(make)> jb{f, primed, make};

  // e_a = sum_b G_{ab} e'_b
  std::vector<GrassmannValue> images;
  for (int a = 0; a < q; ++a) {
    GrassmannValue v(q);
    for (int b = 0; b < q; ++b) {
      v += f.G[static_cast<std::size_t>(a * q + b)] * primed[static_cast<std::size_t>(b)];
    }
    images.push_back(std::move(v));
  }
  const ChristoffelTable old = connection.at(x);
  ChristoffelTable pulled(N, q);
  for (int s = 0; s < N; ++s) {
    for (int u = 0; u < N; ++u) {
      for (int r = 0; r < N; ++r) {
        if (!old(s, u, r).is_zero()) pulled(s, u, r) = substitute(old(s, u, r), images);
      }
    }
  }

  GrassmannMatrix J(static_cast<std::size_t>(N), static_cast<std::size_t>(N), q);
  for (int a = 0; a < N; ++a) {
    for (int s = 0; s < N; ++s) {
      J(static_cast<std::size_t>(a), static_cast<std::size_t>(s)) = jb.J(a, s);
    }
  }
  const GrassmannMatrix M = inverse(J);
  const auto Jv = [&](int a, int s) -> const GrassmannValue& {
    return J(static_cast<std::size_t>(a), static_cast<std::size_t>(s));
  };

  ChristoffelTable out(N, q);
  std::vector<GrassmannValue> w(static_cast<std::size_t>(N), GrassmannValue(q));
  for (int a = 0; a < N; ++a) {
    const int pa = coord_parity(a, chart);
    for (int b = 0; b < N; ++b) {
      const int pb = coord_parity(b, chart);
      // nabla_{d'_a} d'_b = sum_r w_r d_r
      for (int r = 0; r < N; ++r) {
        GrassmannValue v = jb.dJ(a, b, r);
        for (int u = 0; u < N; ++u) {
          if (Jv(b, u).is_zero()) continue;
          GrassmannValue inner(q);
          for (int s = 0; s < N; ++s) {
            if (Jv(a, s).is_zero() || pulled(s, u, r).is_zero()) continue;
            inner += Jv(a, s) * pulled(s, u, r);
          }
          if (inner.is_zero()) continue;
          const int pu = coord_parity(u, chart);
          v += koszul_sign(pa, pb + pu) * (Jv(b, u) * inner);
        }
        w[static_cast<std::size_t>(r)] = std::move(v);
      }
      for (int c = 0; c < N; ++c) {
        GrassmannValue v(q);
        for (int r = 0; r < N; ++r) {
          v += w[static_cast<std::size_t>(r)] *
               M(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
        }
        out(a, b, c) = std::move(v);
      }
    }
  }
  return out;
}

ViolationReport automorphism_equivariance(const SuperConnection& connection,
                                          const std::vector<Expr>& frame,
                                          std::span<const std::vector<double>> samples) {
  const ChartSpec& chart = connection.chart();
  const int n = chart.n;
  const int q = chart.q;
  const int N = chart.total();
  const Frame frame_fns(chart, frame);
  const ReducedConnection reduced_old = reduce_connection(connection);

  ViolationReport report;
  for (const auto& yp : samples) {
    const auto x = base_part(yp, chart);
    const auto ep = fiber_part(yp, chart);

    // transform, then reduce
    const ReducedTable t = reduce_table(transform_connection(connection, frame, x), chart);
    const std::vector<double> route_a = dense(t, ep);

    // reduce, then transform with the classical bundle map
    const FrameData f = frame_fns.at(x);
    const auto make = [](double c) { return c; };
    JacobianBuilder<double, decltype(make)> jb{f, {ep.begin(), ep.end()}, make};
    std::vector<double> y(yp.begin(), yp.end());
    for (int a = 0; a < q; ++a) {
      double v = 0.0;
      for (int b = 0; b < q; ++b) v += f.G[static_cast<std::size_t>(a * q + b)] * ep[b];
      y[static_cast<std::size_t>(n + a)] = v;
    }
    const std::vector<double> G = reduced_old.at(y);
    Eigen::MatrixXd J(N, N);
    for (int a = 0; a < N; ++a) {
      for (int s = 0; s < N; ++s) J(a, s) = jb.J(a, s);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
    if (!lu.isInvertible()) throw NotInvertibleError("frame change is singular");
    const Eigen::MatrixXd M = lu.inverse();
    for (int a = 0; a < N; ++a) {
      for (int b = 0; b < N; ++b) {
        Eigen::VectorXd w(N);
        for (int r = 0; r < N; ++r) {
          double v = jb.dJ(a, b, r);
          for (int s = 0; s < N; ++s) {
            for (int u = 0; u < N; ++u) {
              v += J(a, s) * J(b, u) * G[static_cast<std::size_t>((s * N + u) * N + r)];
            }
          }
          w(r) = v;
        }
        for (int c = 0; c < N; ++c) {
          const double route_b = w.dot(M.col(c));
          report.max_violation = std::max(
              report.max_violation,
              std::abs(route_b - route_a[static_cast<std::size_t>((a * N + b) * N + c)]));
        }
      }
    }
    ++report.samples;
  }
  return report;
}

}  // namespace supergeo
