#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace kansid {

/// Largest supported spline order. Local basis evaluation uses fixed-size
/// scratch buffers of `kMaxSplineOrder + 1` entries.
inline constexpr int kMaxSplineOrder = 10;

/// Uniform B-spline knot grid over [range_min, range_max] with `order` extra
/// knots on each side. Knot vector length is intervals + 2*order + 1 and the
/// basis count is intervals + order.
struct SplineGrid {
  int order = 3;
  int intervals = 5;
  double range_min = -1.0;
  double range_max = 1.0;
  std::vector<double> knots;

  [[nodiscard]] std::size_t basis_count() const noexcept {
    return static_cast<std::size_t>(intervals + order);
  }
  [[nodiscard]] double spacing() const noexcept { return (range_max - range_min) / intervals; }
};

[[nodiscard]] SplineGrid make_uniform_grid(double range_min, double range_max, int intervals, int order);

/// Grid covering the sample range widened by `margin_fraction` of its width on
/// each side. `column` only decorates the error message.
[[nodiscard]] SplineGrid grid_from_samples(std::span<const double> samples, int intervals, int order,
                                           double margin_fraction, std::string_view column = "samples");

/// The k+1 basis functions that can be nonzero on the knot span containing x.
/// `first` is the global index of values[0]. Outside the grid range the
/// boundary span's polynomial pieces are used (extrapolation).
struct LocalBasis {
  std::size_t first = 0;
  std::size_t count = 0;
  double values[kMaxSplineOrder + 1] = {};
  double derivatives[kMaxSplineOrder + 1] = {};
};

/// Fills `out` with the local basis at x; derivatives are computed only when
/// `with_derivatives` is set.
void local_basis(const SplineGrid& grid, double x, LocalBasis& out, bool with_derivatives = true);

[[nodiscard]] std::vector<double> basis_values(const SplineGrid& grid, double x);
[[nodiscard]] std::vector<double> basis_derivatives(const SplineGrid& grid, double x);

}  // namespace kansid
