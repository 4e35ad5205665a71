#include "kansid/symbolic.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "kansid/error.hpp"

namespace kansid {
namespace {

struct SampleStats {
  double mean = 0.0;
  double ss_tot = 0.0;
  bool zero_variance = false;
};

SampleStats sample_stats(std::span<const double> ys) {
  SampleStats s;
  s.mean = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
  double max_abs = 0.0;
  for (double y : ys) {
    s.ss_tot += (y - s.mean) * (y - s.mean);
    max_abs = std::max(max_abs, std::abs(y));
  }
  const double tol = 1e-12 * max_abs;
  s.zero_variance = s.ss_tot <= static_cast<double>(ys.size()) * tol * tol;
  return s;
}

double residual_ss(const SymbolicFn& fn, std::span<const double> xs, std::span<const double> ys) {
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - fn(xs[i]);
    ss += r * r;
  }
  return ss;
}

/// Least-squares (c, d) for y ~ c*f + d given precomputed f values.
/// Returns the residual sum of squares.
double fit_scale_offset(std::span<const double> f, std::span<const double> ys, double& c, double& d) {
  const double n = static_cast<double>(f.size());
  double fm = 0.0;
  double ym = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    fm += f[i];
    ym += ys[i];
  }
  fm /= n;
  ym /= n;
  double sff = 0.0;
  double sfy = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    sff += (f[i] - fm) * (f[i] - fm);
    sfy += (f[i] - fm) * (ys[i] - ym);
  }
  c = sff > 0.0 && std::isfinite(sff) ? sfy / sff : 0.0;
  d = ym - c * fm;
  double ss = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double r = ys[i] - (c * f[i] + d);
    ss += r * r;
  }
  return std::isfinite(ss) ? ss : std::numeric_limits<double>::infinity();
}

struct SearchBox {
  double alpha_max;
  double beta_min;
  double beta_max;
};

SearchBox search_box(Primitive p) {
  switch (p) {
    case Primitive::kSquare: return {2.0, -4.0, 4.0};
    case Primitive::kSine: return {8.0, -std::numbers::pi, std::numbers::pi};
    case Primitive::kExponential: return {4.0, 0.0, 0.0};
    default: return {1.0, 0.0, 0.0};
  }
}

/// Coarse-to-fine search over (alpha, beta) in normalized coordinates
/// u = (x - center) / half_width, z = alpha*u + beta.
SymbolicFn grid_search(Primitive p, std::span<const double> xs, std::span<const double> ys) {
  const auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
  const double center = 0.5 * (*lo_it + *hi_it);
  double half = 0.5 * (*hi_it - *lo_it);
  if (!(half > 0.0)) half = 1.0;

  std::vector<double> u(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) u[i] = (xs[i] - center) / half;
  std::vector<double> f(xs.size());

  const SearchBox box = search_box(p);
  double best_ss = std::numeric_limits<double>::infinity();
  double best_alpha = 1.0;
  double best_beta = 0.0;
  double best_c = 0.0;
  double best_d = 0.0;

  auto try_point = [&](double alpha, double beta) {
    for (std::size_t i = 0; i < u.size(); ++i) f[i] = primitive_value(p, alpha * u[i] + beta);
    double c = 0.0;
    double d = 0.0;
    const double ss = fit_scale_offset(f, ys, c, d);
    if (ss < best_ss) {
      best_ss = ss;
      best_alpha = alpha;
      best_beta = beta;
      best_c = c;
      best_d = d;
    }
  };

  constexpr int kCoarse = 40;
  const double beta_span = box.beta_max - box.beta_min;
  double da = 2.0 * box.alpha_max / kCoarse;
  double db = beta_span / kCoarse;
  for (int i = 0; i <= kCoarse; ++i) {
    const double alpha = -box.alpha_max + i * da;
    if (beta_span == 0.0) {
      try_point(alpha, box.beta_min);
      continue;
    }
    for (int j = 0; j <= kCoarse; ++j) try_point(alpha, box.beta_min + j * db);
  }
  constexpr int kFine = 5;
  for (int round = 0; round < 4; ++round) {
    const double ca = best_alpha;
    const double cb = best_beta;
    da /= kFine;
    db /= kFine;
    for (int i = -kFine; i <= kFine; ++i) {
      for (int j = -kFine; j <= kFine; ++j) {
        if (beta_span == 0.0 && j != 0) continue;
        try_point(ca + i * da, cb + j * db);
      }
    }
  }

  SymbolicFn fn;
  fn.primitive = p;
  fn.a = best_alpha / half;
  fn.b = best_beta - best_alpha * center / half;
  fn.c = best_c;
  fn.d = best_d;
  return fn;
}

int complexity(Primitive p) { return static_cast<int>(p); }

}  // namespace

SymbolicCandidate fit_primitive(Primitive p, std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InvalidArgument("symbolic fit needs matching x and y sample counts");
  if (xs.empty()) throw InvalidArgument("symbolic fit needs samples");
  const SampleStats stats = sample_stats(ys);

  SymbolicFn fn;
  fn.primitive = p;
  switch (p) {
    case Primitive::kZero:
      fn.c = 0.0;
      fn.d = 0.0;
      break;
    case Primitive::kConstant:
      fn.c = stats.mean;
      fn.d = 0.0;
      break;
    case Primitive::kLinear: {
      std::vector<double> f(xs.begin(), xs.end());
      fit_scale_offset(f, ys, fn.c, fn.d);
      break;
    }
    default:
      fn = grid_search(p, xs, ys);
      break;
  }

  SymbolicCandidate cand;
  cand.fn = fn;
  if (!stats.zero_variance) cand.r2 = 1.0 - residual_ss(fn, xs, ys) / stats.ss_tot;
  return cand;
}

std::vector<SymbolicCandidate> suggest_symbolic(std::span<const double> xs, std::span<const double> ys,
                                                std::span<const Primitive> library) {
  if (xs.size() != ys.size()) throw InvalidArgument("symbolic fit needs matching x and y sample counts");
  if (xs.size() < 10) throw InvalidArgument("symbolic suggestion needs at least 10 samples");
  std::vector<SymbolicCandidate> out;
  out.reserve(library.size());
  for (Primitive p : library) out.push_back(fit_primitive(p, xs, ys));

  const SampleStats stats = sample_stats(ys);
  if (stats.zero_variance) {
    const bool all_zero = std::all_of(ys.begin(), ys.end(), [](double y) { return y == 0.0; });
    auto rank = [&](Primitive p) {
      if (p == Primitive::kZero) return all_zero ? 0 : 1;
      if (p == Primitive::kConstant) return all_zero ? 1 : 0;
      return 2 + complexity(p);
    };
    std::stable_sort(out.begin(), out.end(), [&](const SymbolicCandidate& x, const SymbolicCandidate& y) {
      return rank(x.fn.primitive) < rank(y.fn.primitive);
    });
    return out;
  }
  std::stable_sort(out.begin(), out.end(), [](const SymbolicCandidate& x, const SymbolicCandidate& y) {
    const double rx = *x.r2;
    const double ry = *y.r2;
    if (std::abs(rx - ry) > 1e-12) return rx > ry;
    return complexity(x.fn.primitive) < complexity(y.fn.primitive);
  });
  return out;
}

std::vector<double> edge_samples(const KanNetwork& net, std::size_t layer, std::size_t out, std::size_t in,
                                 std::span<const double> xs) {
  if (layer >= net.layers.size() || out >= net.layers[layer].out_dim || in >= net.layers[layer].in_dim) {
    throw InvalidArgument("edge " + edge_id(layer, out, in) + " does not exist");
  }
  const SplineEdge& e = net.layers[layer].edge(out, in);
  std::vector<double> ys(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = edge_eval(e, xs[i]);
  return ys;
}

double fix_symbolic(KanNetwork& net, std::size_t layer, std::size_t out, std::size_t in, Primitive p,
                    std::span<const double> xs, std::span<const double> ys) {
  if (layer >= net.layers.size() || out >= net.layers[layer].out_dim || in >= net.layers[layer].in_dim) {
    throw InvalidArgument("edge " + edge_id(layer, out, in) + " does not exist");
  }
  const SymbolicCandidate cand = fit_primitive(p, xs, ys);
  SplineEdge& e = net.layers[layer].edge(out, in);
  e.symbolic = cand.fn;
  e.trainable = false;
  if (cand.r2) return *cand.r2;
  return residual_ss(cand.fn, xs, ys) <= 1e-24 * static_cast<double>(xs.size()) ? 1.0 : 0.0;
}

void fix_input_zero_in_place(KanNetwork& net, std::size_t input_index) {
  if (net.layers.empty() || input_index >= net.input_dim()) {
    throw InvalidArgument("input index " + std::to_string(input_index) + " out of range");
  }
  KanLayer& first = net.layers.front();
  for (std::size_t out = 0; out < first.out_dim; ++out) {
    SplineEdge& e = first.edge(out, input_index);
    e.symbolic = SymbolicFn{Primitive::kZero, 1.0, 0.0, 0.0, 0.0};
    e.trainable = false;
  }
}

KanNetwork fix_input_zero(const KanNetwork& net, std::size_t input_index) {
  KanNetwork copy = net;
  fix_input_zero_in_place(copy, input_index);
  return copy;
}

double SymbolicEquation::evaluate(std::span<const double> g) const {
  if (g.size() != slopes.size()) throw InvalidArgument("equation input has the wrong length");
  double y = constant;
  for (std::size_t i = 0; i < g.size(); ++i) y += slopes[i] * g[i];
  return y;
}

std::string SymbolicEquation::to_string(int precision) const {
  std::ostringstream os;
  os.precision(precision);
  for (std::size_t i = 0; i < slopes.size(); ++i) {
    const double s = slopes[i];
    if (i == 0) {
      os << s;
    } else {
      os << (std::signbit(s) ? " - " : " + ") << std::abs(s);
    }
    os << '*' << input_labels[i];
  }
  if (slopes.empty()) {
    os << constant;
  } else {
    os << (std::signbit(constant) ? " - " : " + ") << std::abs(constant);
  }
  return os.str();
}

SymbolicEquation to_equation(const KanNetwork& net) {
  if (net.output_dim() != 1) throw InvalidArgument("equation extraction needs a single-output network");
  std::vector<std::string> offending;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const KanLayer& layer = net.layers[l];
    for (std::size_t out = 0; out < layer.out_dim; ++out) {
      for (std::size_t in = 0; in < layer.in_dim; ++in) {
        const SplineEdge& e = layer.edge(out, in);
        if (!e.symbolic || !is_affine(e.symbolic->primitive)) offending.push_back(edge_id(l, out, in));
      }
    }
  }
  if (!offending.empty()) {
    std::string msg = "network is not fully affine-symbolic; offending edges:";
    for (const auto& id : offending) msg += " [" + id + "]";
    throw NotSymbolic(msg, offending);
  }

  const std::size_t n = net.input_dim();
  // Affine form of every node in the current node layer: coefficients + constant.
  std::vector<std::vector<double>> coef(n, std::vector<double>(n, 0.0));
  std::vector<double> cst(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) coef[i][i] = 1.0;

  for (const KanLayer& layer : net.layers) {
    std::vector<std::vector<double>> next_coef(layer.out_dim, std::vector<double>(n, 0.0));
    std::vector<double> next_cst(layer.out_dim, 0.0);
    for (std::size_t out = 0; out < layer.out_dim; ++out) {
      for (std::size_t in = 0; in < layer.in_dim; ++in) {
        const SymbolicFn& s = *layer.edge(out, in).symbolic;
        double slope = 0.0;
        double offset = 0.0;
        switch (s.primitive) {
          case Primitive::kLinear:
            slope = s.c * s.a;
            offset = s.c * s.b + s.d;
            break;
          case Primitive::kConstant: offset = s.c + s.d; break;
          default: offset = s.d; break;
        }
        for (std::size_t k = 0; k < n; ++k) next_coef[out][k] += slope * coef[in][k];
        next_cst[out] += slope * cst[in] + offset;
      }
    }
    coef = std::move(next_coef);
    cst = std::move(next_cst);
  }

  SymbolicEquation eq;
  eq.state_label = net.output_label;
  eq.input_labels = net.input_labels;
  eq.slopes = coef.front();
  eq.constant = cst.front();
  eq.scale_applied = false;
  return eq;
}

SymbolicEquation rescale_by_sample_period(const SymbolicEquation& eq, double ts_seconds) {
  if (!(ts_seconds > 0.0)) throw InvalidArgument("sample period must be positive to rescale an equation");
  if (eq.scale_applied) throw InvalidArgument("equation '" + eq.state_label + "' is already rescaled");
  SymbolicEquation out = eq;
  const double inv = 1.0 / ts_seconds;
  for (auto& s : out.slopes) s *= inv;
  out.constant *= inv;
  out.scale_applied = true;
  return out;
}

}  // namespace kansid
