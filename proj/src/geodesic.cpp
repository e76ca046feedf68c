#include "supergeo/geodesic.hpp"

#include <algorithm>
#include <cmath>

#include "format.hpp"
#include "supergeo/error.hpp"

namespace supergeo {

std::vector<double> CurveSample::point(std::size_t k) const {
  std::vector<double> p = f[k];
  p.insert(p.end(), h[k].begin(), h[k].end());
  return p;
}

std::vector<double> CurveSample::velocity(std::size_t k) const {
  std::vector<double> v = df[k];
  v.insert(v.end(), dh[k].begin(), dh[k].end());
  return v;
}

GeodesicRhs super_geodesic_rhs(const SuperConnection& connection) {
  return [connection](std::span<const double> position,
                      std::span<const double> velocity) {
    const ChartSpec& chart = connection.chart();
    const int n = chart.n;
    const int N = chart.total();
    if (static_cast<int>(position.size()) != N || static_cast<int>(velocity.size()) != N) {
      throw DimensionError("super geodesic state needs n+q components");
    }
    const auto f = position.first(static_cast<std::size_t>(n));
    const ChristoffelTable gamma = connection.at(f);

    // Phi^*(e_b) = h_b tau, Phi^*(x_i) = f_i
    const GrassmannValue tau = GrassmannValue::generator(1, 1);
    std::vector<GrassmannValue> images;
    for (int b = n; b < N; ++b) images.push_back(position[static_cast<std::size_t>(b)] * tau);
    std::vector<GrassmannValue> dq;
    for (int s = 0; s < N; ++s) {
      const double v = velocity[static_cast<std::size_t>(s)];
      dq.push_back(s < n ? GrassmannValue::scalar(1, v) : v * tau);
    }

    std::vector<double> acceleration(static_cast<std::size_t>(N), 0.0);
    for (int s = 0; s < N; ++s) {
      GrassmannValue total(1);
      for (int u = 0; u < N; ++u) {
        for (int r = 0; r < N; ++r) {
          const GrassmannValue& g = gamma(u, r, s);
          if (g.is_zero()) continue;
          total -= dq[static_cast<std::size_t>(u)] * dq[static_cast<std::size_t>(r)] *
                   substitute(g, images);
        }
      }
      acceleration[static_cast<std::size_t>(s)] =
          s < n ? body(total) : total.coefficient(MultiIndex::single(1));
    }
    return acceleration;
  };
}

GeodesicRhs classical_geodesic_rhs(const ReducedConnection& connection) {
  return [connection](std::span<const double> position,
                      std::span<const double> velocity) {
    const int N = connection.dim();
    const std::vector<double> gamma = connection.at(position);
    std::vector<double> acceleration(static_cast<std::size_t>(N), 0.0);
    for (int s = 0; s < N; ++s) {
      for (int u = 0; u < N; ++u) {
        const double vv = velocity[static_cast<std::size_t>(s)] *
                          velocity[static_cast<std::size_t>(u)];
        if (vv == 0.0) continue;
        for (int r = 0; r < N; ++r) {
          acceleration[static_cast<std::size_t>(r)] -=
              vv * gamma[static_cast<std::size_t>((s * N + u) * N + r)];
        }
      }
    }
    return acceleration;
  };
}

GeodesicRhs base_geodesic_rhs(const ReducedConnection& connection) {
  return [connection](std::span<const double> position,
                      std::span<const double> velocity) {
    const int n = connection.chart().n;
    const std::vector<double> gamma = zero_section_pullback(connection, position);
    std::vector<double> acceleration(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double vv = velocity[static_cast<std::size_t>(i)] *
                          velocity[static_cast<std::size_t>(j)];
        for (int k = 0; k < n; ++k) {
          acceleration[static_cast<std::size_t>(k)] -=
              vv * gamma[static_cast<std::size_t>((i * n + j) * n + k)];
        }
      }
    }
    return acceleration;
  };
}

CurveSample integrate(const GeodesicRhs& rhs, const InitialCondition& ic,
                      const ChartBox& box, double t_end, double dt) {
  if (!(dt > 0.0) || !(t_end > 0.0)) {
    throw DomainError("integration needs dt > 0 and t_end > 0");
  }
  if (ic.x0.size() != ic.v0.size() || ic.e0.size() != ic.w0.size()) {
    throw DimensionError("initial condition components have mismatched sizes");
  }
  if (ic.x0.size() != box.dim()) {
    throw DimensionError("initial point has dimension " + std::to_string(ic.x0.size()) +
                         ", chart box has " + std::to_string(box.dim()));
  }
  if (!box.contains(ic.x0)) throw DomainError("initial point lies outside the chart box");

  const std::size_t n = ic.x0.size();
  std::vector<double> y = ic.x0;
  y.insert(y.end(), ic.e0.begin(), ic.e0.end());
  std::vector<double> v = ic.v0;
  v.insert(v.end(), ic.w0.begin(), ic.w0.end());
  const std::size_t dim = y.size();

  CurveSample curve;
  const auto record = [&](double t) {
    curve.times.push_back(t);
    curve.f.emplace_back(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
    curve.h.emplace_back(y.begin() + static_cast<std::ptrdiff_t>(n), y.end());
    curve.df.emplace_back(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n));
    curve.dh.emplace_back(v.begin() + static_cast<std::ptrdiff_t>(n), v.end());
  };
  record(0.0);

  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  std::vector<double> yk(dim);
  std::vector<double> vk(dim);
  for (std::size_t step = 1; step <= steps; ++step) {
    const double t0 = static_cast<double>(step - 1) * dt;
    const double t1 = step == steps ? t_end : static_cast<double>(step) * dt;
    const double h = t1 - t0;

    const std::vector<double> a1 = rhs(y, v);
    const std::vector<double>& v1 = v;
    for (std::size_t k = 0; k < dim; ++k) {
      yk[k] = y[k] + 0.5 * h * v1[k];
      vk[k] = v[k] + 0.5 * h * a1[k];
    }
    const std::vector<double> v2 = vk;
    const std::vector<double> a2 = rhs(yk, vk);
    for (std::size_t k = 0; k < dim; ++k) {
      yk[k] = y[k] + 0.5 * h * v2[k];
      vk[k] = v[k] + 0.5 * h * a2[k];
    }
    const std::vector<double> v3 = vk;
    const std::vector<double> a3 = rhs(yk, vk);
    for (std::size_t k = 0; k < dim; ++k) {
      yk[k] = y[k] + h * v3[k];
      vk[k] = v[k] + h * a3[k];
    }
    const std::vector<double> v4 = vk;
    const std::vector<double> a4 = rhs(yk, vk);
    for (std::size_t k = 0; k < dim; ++k) {
      y[k] += h / 6.0 * (v1[k] + 2.0 * v2[k] + 2.0 * v3[k] + v4[k]);
      v[k] += h / 6.0 * (a1[k] + 2.0 * a2[k] + 2.0 * a3[k] + a4[k]);
    }
    if (!box.contains(std::span<const double>(y).first(n))) {
      curve.truncated = true;
      break;
    }
    record(t1);
  }
  return curve;
}

Correspondence correspond(const SuperConnection& connection,
                          const ReducedConnection& reduced, const InitialCondition& ic,
                          const ChartBox& box, double t_end, double dt) {
  Correspondence out;
  out.super_curve = integrate(super_geodesic_rhs(connection), ic, box, t_end, dt);
  out.classical_curve = integrate(classical_geodesic_rhs(reduced), ic, box, t_end, dt);
  for (const auto* c : {&out.super_curve, &out.classical_curve}) {
    if (c->truncated) {
      throw DomainError(std::string(c == &out.super_curve ? "super" : "classical") +
                        " geodesic left the chart box after t=" +
                        detail::format_double(c->times.back()));
    }
  }
  for (std::size_t k = 0; k < out.super_curve.size(); ++k) {
    const std::vector<double> a = out.super_curve.point(k);
    const std::vector<double> b = out.classical_curve.point(k);
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    out.deviation.push_back(d);
    out.max_deviation = std::max(out.max_deviation, d);
  }
  return out;
}

double correspondence_deviation(const SuperConnection& connection,
                                const ReducedConnection& reduced,
                                const InitialCondition& ic, const ChartBox& box,
                                double t_end, double dt) {
  return correspond(connection, reduced, ic, box, t_end, dt).max_deviation;
}

std::vector<double> energy_along(const ReducedMetric& metric, const CurveSample& curve) {
  const int N = metric.dim();
  std::vector<double> out;
  out.reserve(curve.size());
  for (std::size_t k = 0; k < curve.size(); ++k) {
    const std::vector<double> y = curve.point(k);
    const std::vector<double> v = curve.velocity(k);
    const std::vector<double> g = metric.at(y);
    double e = 0.0;
    for (int a = 0; a < N; ++a) {
      for (int b = 0; b < N; ++b) {
        e += v[static_cast<std::size_t>(a)] * g[static_cast<std::size_t>(a * N + b)] *
             v[static_cast<std::size_t>(b)];
      }
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace supergeo
