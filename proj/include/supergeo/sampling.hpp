#pragma once

// Sample points for pointwise checks: a Halton sequence mapped into a box.

#include <span>
#include <vector>

namespace supergeo {

struct ChartBox {
  std::vector<double> lower;
  std::vector<double> upper;

  /// Closed box membership.
  bool contains(std::span<const double> x) const;
  std::size_t dim() const { return lower.size(); }
};

/// Unit box [-1, 1]^dim.
ChartBox symmetric_box(std::size_t dim, double half_width = 1.0);

/// `count` Halton points strictly inside `box` (the sequence skips index 0).
std::vector<std::vector<double>> halton_points(const ChartBox& box,
                                               std::size_t count);

/// Points of the total space E: base coordinates from `box`, fiber
/// coordinates in [-fiber_half_width, fiber_half_width]^q.
std::vector<std::vector<double>> total_space_points(const ChartBox& box, int q,
                                                    std::size_t count,
                                                    double fiber_half_width = 1.0);

/// Default sample count, overridden by the SUPERGEO_SAMPLES environment variable.
std::size_t default_sample_count();

}  // namespace supergeo
