#include "kansid/spline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kansid/error.hpp"

namespace kansid {

SplineGrid make_uniform_grid(double range_min, double range_max, int intervals, int order) {
  if (!(range_min < range_max) || !std::isfinite(range_min) || !std::isfinite(range_max)) {
    std::ostringstream msg;
    msg << "spline grid range is degenerate: [" << range_min << ", " << range_max << "]";
    throw InvalidArgument(msg.str());
  }
  if (intervals < 1) throw InvalidArgument("spline grid needs at least one interval");
  if (order < 0 || order > kMaxSplineOrder) {
    throw InvalidArgument("spline order must lie in [0, " + std::to_string(kMaxSplineOrder) + "]");
  }

  SplineGrid grid;
  grid.order = order;
  grid.intervals = intervals;
  grid.range_min = range_min;
  grid.range_max = range_max;
  const double h = (range_max - range_min) / intervals;
  const int n = intervals + 2 * order + 1;
  grid.knots.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    grid.knots[static_cast<std::size_t>(i)] = range_min + (i - order) * h;
  }
  // Pin the range endpoints exactly; the multiplication above can be off by an ulp.
  grid.knots[static_cast<std::size_t>(order)] = range_min;
  grid.knots[static_cast<std::size_t>(intervals + order)] = range_max;
  return grid;
}

SplineGrid grid_from_samples(std::span<const double> samples, int intervals, int order,
                             double margin_fraction, std::string_view column) {
  if (samples.empty()) {
    throw InvalidArgument("no samples to fit a spline grid for column '" + std::string(column) + "'");
  }
  if (!(margin_fraction >= 0.0)) throw InvalidArgument("grid margin fraction must be >= 0");
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(lo < hi)) {
    std::ostringstream msg;
    msg << "column '" << column << "' is constant (" << lo << "); cannot fit a spline grid";
    throw DegenerateData(msg.str());
  }
  const double m = margin_fraction * (hi - lo);
  return make_uniform_grid(lo - m, hi + m, intervals, order);
}

void local_basis(const SplineGrid& grid, double x, LocalBasis& out, bool with_derivatives) {
  const int k = grid.order;
  const int g = grid.intervals;
  const double h = grid.spacing();
  const auto& t = grid.knots;

  // Interval index inside the core range, clamped so that out-of-range points
  // reuse the boundary polynomial pieces.
  double rel = std::floor((x - grid.range_min) / h);
  if (!(rel >= 0.0)) rel = 0.0;  // also catches NaN
  const int interval = std::min(static_cast<int>(std::min(rel, static_cast<double>(g))), g - 1);
  const int span = interval + k;

  // Cox-de Boor triangle restricted to the span (Piegl & Tiller A2.2).
  double n[kMaxSplineOrder + 1];
  double left[kMaxSplineOrder + 1];
  double right[kMaxSplineOrder + 1];
  double lower[kMaxSplineOrder + 1];  // degree k-1 values, for derivatives
  n[0] = 1.0;
  lower[0] = 1.0;
  for (int j = 1; j <= k; ++j) {
    if (j == k) std::copy(n, n + k, lower);
    left[j] = x - t[static_cast<std::size_t>(span + 1 - j)];
    right[j] = t[static_cast<std::size_t>(span + j)] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = n[r] / (right[r + 1] + left[j - r]);
      n[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    n[j] = saved;
  }

  out.first = static_cast<std::size_t>(span - k);
  out.count = static_cast<std::size_t>(k + 1);
  std::copy(n, n + k + 1, out.values);
  if (!with_derivatives) return;
  if (k == 0) {
    out.derivatives[0] = 0.0;
    return;
  }
  // Uniform knots: B'_{i,k} = (B_{i,k-1} - B_{i+1,k-1}) / h. On this span the
  // degree k-1 functions are lower[0..k-1] = B_{span-k+1..span, k-1}.
  for (int r = 0; r <= k; ++r) {
    const double a = r >= 1 ? lower[r - 1] : 0.0;
    const double b = r < k ? lower[r] : 0.0;
    out.derivatives[r] = (a - b) / h;
  }
}

std::vector<double> basis_values(const SplineGrid& grid, double x) {
  LocalBasis local;
  local_basis(grid, x, local, false);
  std::vector<double> full(grid.basis_count(), 0.0);
  for (std::size_t r = 0; r < local.count; ++r) full[local.first + r] = local.values[r];
  return full;
}

std::vector<double> basis_derivatives(const SplineGrid& grid, double x) {
  LocalBasis local;
  local_basis(grid, x, local, true);
  std::vector<double> full(grid.basis_count(), 0.0);
  for (std::size_t r = 0; r < local.count; ++r) full[local.first + r] = local.derivatives[r];
  return full;
}

}  // namespace kansid
