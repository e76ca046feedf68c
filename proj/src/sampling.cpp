#include "supergeo/sampling.hpp"

#include <cstdlib>
#include <string>

#include "supergeo/error.hpp"

namespace supergeo {

namespace {

constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31,
                           37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79,
                           83, 89, 97, 101, 103, 107, 109, 113, 127, 131};

double radical_inverse(std::size_t index, int base) {
  double result = 0.0;
  double scale = 1.0 / base;
  while (index > 0) {
    result += static_cast<double>(index % static_cast<std::size_t>(base)) * scale;
    index /= static_cast<std::size_t>(base);
    scale /= base;
  }
  return result;
}

}  // namespace

bool ChartBox::contains(std::span<const double> x) const {
  if (x.size() < lower.size()) return false;
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
  }
  return true;
}

ChartBox symmetric_box(std::size_t dim, double half_width) {
  return {std::vector<double>(dim, -half_width),
          std::vector<double>(dim, half_width)};
}

std::vector<std::vector<double>> halton_points(const ChartBox& box,
                                               std::size_t count) {
  const std::size_t dim = box.dim();
  if (dim > std::size(kPrimes)) throw DimensionError("box dimension too large");
  std::vector<std::vector<double>> points;
  points.reserve(count);
  for (std::size_t k = 1; k <= count; ++k) {
    std::vector<double> p(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      const double u = radical_inverse(k, kPrimes[d]);
      p[d] = box.lower[d] + u * (box.upper[d] - box.lower[d]);
    }
    points.push_back(std::move(p));
  }
  return points;
}

std::vector<std::vector<double>> total_space_points(const ChartBox& box, int q,
                                                    std::size_t count,
                                                    double fiber_half_width) {
  ChartBox extended = box;
  for (int a = 0; a < q; ++a) {
    extended.lower.push_back(-fiber_half_width);
    extended.upper.push_back(fiber_half_width);
  }
  return halton_points(extended, count);
}

std::size_t default_sample_count() {
  if (const char* env = std::getenv("SUPERGEO_SAMPLES")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return 32;
}

}  // namespace supergeo
