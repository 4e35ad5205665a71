#pragma once

// Independent reference implementations used as test oracles.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "kansid/kan.hpp"

namespace oracle {

/// Textbook recursive Cox-de Boor, half-open support [t_i, t_{i+1}).
template <class T = double>
T cox_de_boor(const std::vector<double>& t, std::size_t i, int p, T x) {
  if (p == 0) return (t[i] <= x && x < t[i + 1]) ? T(1) : T(0);
  T left = 0;
  T right = 0;
  const T dl = T(t[i + p]) - T(t[i]);
  const T dr = T(t[i + p + 1]) - T(t[i + 1]);
  if (dl > 0) left = (x - T(t[i])) / dl * cox_de_boor<T>(t, i, p - 1, x);
  if (dr > 0) right = (T(t[i + p + 1]) - x) / dr * cox_de_boor<T>(t, i + 1, p - 1, x);
  return left + right;
}

/// The same recursion with the degree-0 indicator fixed to knot span `span`:
/// the polynomial piece of that span, valid for any x. Outside the grid range
/// the boundary span's piece is the extrapolation convention.
template <class T = double>
T span_piece(const std::vector<double>& t, std::size_t i, int p, T x, std::size_t span) {
  if (p == 0) return i == span ? T(1) : T(0);
  T left = 0;
  T right = 0;
  const T dl = T(t[i + p]) - T(t[i]);
  const T dr = T(t[i + p + 1]) - T(t[i + 1]);
  if (dl > 0) left = (x - T(t[i])) / dl * span_piece<T>(t, i, p - 1, x, span);
  if (dr > 0) right = (T(t[i + p + 1]) - x) / dr * span_piece<T>(t, i + 1, p - 1, x, span);
  return left + right;
}

/// Core-range knot span holding x, clamped to the first/last core span.
template <class T = double>
std::size_t core_span(const kansid::SplineGrid& g, T x) {
  std::size_t span = static_cast<std::size_t>(g.order);
  for (std::size_t j = span; j + 1 < static_cast<std::size_t>(g.order + g.intervals) + 1; ++j) {
    if (x >= T(g.knots[j])) span = j;
  }
  return std::min(span, static_cast<std::size_t>(g.order + g.intervals - 1));
}

template <class T = double>
T silu(T x) {
  return x / (T(1) + std::exp(-x));
}

/// Straight-line evaluation of one edge from its fields.
template <class T = double>
T edge(const kansid::SplineEdge& e, T x) {
  if (e.symbolic) {
    const auto& s = *e.symbolic;
    const T z = T(s.a) * x + T(s.b);
    T f = 0;
    switch (s.primitive) {
      case kansid::Primitive::kZero: f = 0; break;
      case kansid::Primitive::kConstant: f = 1; break;
      case kansid::Primitive::kLinear: f = z; break;
      case kansid::Primitive::kSquare: f = z * z; break;
      case kansid::Primitive::kSine: f = std::sin(z); break;
      case kansid::Primitive::kExponential: f = std::exp(z); break;
    }
    return T(s.c) * f + T(s.d);
  }
  T spline = 0;
  const std::size_t span = core_span<T>(e.grid, x);
  for (std::size_t i = 0; i < e.coeffs.size(); ++i) {
    spline += T(e.coeffs[i]) * span_piece<T>(e.grid.knots, i, e.grid.order, x, span);
  }
  return T(e.w_base) * silu<T>(x) + T(e.w_spline) * spline;
}

template <class T = double>
std::vector<T> network(const kansid::KanNetwork& net, const std::vector<double>& g) {
  std::vector<T> x(g.begin(), g.end());
  for (const auto& layer : net.layers) {
    std::vector<T> next(layer.out_dim, T(0));
    for (std::size_t o = 0; o < layer.out_dim; ++o) {
      for (std::size_t i = 0; i < layer.in_dim; ++i) next[o] += edge<T>(layer.edges[o * layer.in_dim + i], x[i]);
    }
    x = std::move(next);
  }
  return x;
}

/// d output / d theta[p] by central differences of the extended-precision
/// re-evaluation, so rounding in the oracle stays far below the tolerance.
inline double parameter_fd(const kansid::KanNetwork& net, const std::vector<double>& g, std::size_t p,
                           double h = 1e-6) {
  std::vector<double> theta = kansid::get_parameters(net);
  kansid::KanNetwork copy = net;
  const double t0 = theta[p];
  theta[p] = t0 + h;
  const double up = theta[p] - t0;
  kansid::set_parameters(copy, theta);
  const long double fp = network<long double>(copy, g)[0];
  theta[p] = t0 - h;
  const double down = t0 - theta[p];
  kansid::set_parameters(copy, theta);
  const long double fm = network<long double>(copy, g)[0];
  return static_cast<double>((fp - fm) / (static_cast<long double>(up) + down));
}

/// Central finite difference of f around x[i].
inline double central_diff(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
                           std::size_t i, double h) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double fp = f(x);
  x[i] = x0 - h;
  const double fm = f(x);
  return (fp - fm) / (2.0 * h);
}

/// |a - b| relative to the larger magnitude, with an absolute floor for
/// entries that are zero up to rounding.
inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace oracle
