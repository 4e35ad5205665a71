#include "kansid/kan.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "kansid/error.hpp"

namespace kansid {

std::string_view primitive_name(Primitive p) noexcept {
  switch (p) {
    case Primitive::kZero: return "zero";
    case Primitive::kConstant: return "constant";
    case Primitive::kLinear: return "linear";
    case Primitive::kSquare: return "square";
    case Primitive::kSine: return "sine";
    case Primitive::kExponential: return "exponential";
  }
  return "zero";
}

Primitive primitive_from_name(std::string_view name) {
  for (Primitive p : kAllPrimitives) {
    if (primitive_name(p) == name) return p;
  }
  throw InvalidArgument("unknown symbolic primitive '" + std::string(name) + "'");
}

bool is_affine(Primitive p) noexcept {
  return p == Primitive::kZero || p == Primitive::kConstant || p == Primitive::kLinear;
}

double primitive_value(Primitive p, double z) noexcept {
  switch (p) {
    case Primitive::kZero: return 0.0;
    case Primitive::kConstant: return 1.0;
    case Primitive::kLinear: return z;
    case Primitive::kSquare: return z * z;
    case Primitive::kSine: return std::sin(z);
    case Primitive::kExponential: return std::exp(z);
  }
  return 0.0;
}

double primitive_derivative(Primitive p, double z) noexcept {
  switch (p) {
    case Primitive::kZero:
    case Primitive::kConstant: return 0.0;
    case Primitive::kLinear: return 1.0;
    case Primitive::kSquare: return 2.0 * z;
    case Primitive::kSine: return std::cos(z);
    case Primitive::kExponential: return std::exp(z);
  }
  return 0.0;
}

std::size_t KanNetwork::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& layer : layers) {
    for (const auto& e : layer.edges) n += e.parameter_count();
  }
  return n;
}

std::string edge_id(std::size_t layer, std::size_t out, std::size_t in) {
  std::ostringstream os;
  os << layer << ',' << out << ',' << in;
  return os.str();
}

KanNetwork make_network(std::vector<std::size_t> shape, std::vector<std::string> input_labels, std::uint64_t seed,
                        const NetworkInit& init) {
  if (shape.size() < 2) throw InvalidArgument("network shape needs at least an input and an output width");
  for (std::size_t w : shape) {
    if (w == 0) throw InvalidArgument("network layer widths must be positive");
  }
  if (input_labels.empty()) {
    for (std::size_t i = 0; i < shape.front(); ++i) input_labels.push_back("x" + std::to_string(i));
  }
  if (input_labels.size() != shape.front()) {
    throw InvalidArgument("input label count does not match the input width");
  }

  KanNetwork net;
  net.shape = std::move(shape);
  net.input_labels = std::move(input_labels);
  net.seed = seed;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> coeff_dist(0.0, init.coeff_noise);
  const SplineGrid grid = make_uniform_grid(-1.0, 1.0, init.grid_intervals, init.grid_order);
  for (std::size_t l = 0; l + 1 < net.shape.size(); ++l) {
    KanLayer layer;
    layer.in_dim = net.shape[l];
    layer.out_dim = net.shape[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in_dim));
    std::uniform_real_distribution<double> base_dist(-bound, bound);
    layer.edges.resize(layer.in_dim * layer.out_dim);
    for (auto& e : layer.edges) {
      e.grid = grid;
      e.coeffs.resize(grid.basis_count());
      for (auto& c : e.coeffs) c = coeff_dist(rng);
      e.w_base = base_dist(rng);
      e.w_spline = 1.0;
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

void set_edge_grids(KanNetwork& net, std::size_t layer, std::size_t in, const SplineGrid& grid) {
  if (layer >= net.layers.size() || in >= net.layers[layer].in_dim) {
    throw InvalidArgument("edge grid target out of range");
  }
  auto& L = net.layers[layer];
  for (std::size_t out = 0; out < L.out_dim; ++out) {
    auto& e = L.edge(out, in);
    if (e.coeffs.size() != grid.basis_count()) e.coeffs.assign(grid.basis_count(), 0.0);
    e.grid = grid;
  }
}

double silu(double x) noexcept { return x / (1.0 + std::exp(-x)); }

double silu_derivative(double x) noexcept {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}

namespace {

double spline_sum(const SplineEdge& e, const LocalBasis& basis) {
  double s = 0.0;
  for (std::size_t r = 0; r < basis.count; ++r) s += e.coeffs[basis.first + r] * basis.values[r];
  return s;
}

void check_input(const KanNetwork& net, std::span<const double> g) {
  if (g.size() != net.input_dim()) {
    std::ostringstream msg;
    msg << "network expects " << net.input_dim() << " inputs, got " << g.size();
    throw InvalidArgument(msg.str());
  }
}

}  // namespace

double edge_eval(const SplineEdge& edge, double x) {
  if (edge.symbolic) return (*edge.symbolic)(x);
  LocalBasis basis;
  local_basis(edge.grid, x, basis, false);
  return edge.w_base * silu(x) + edge.w_spline * spline_sum(edge, basis);
}

ForwardResult forward(const KanNetwork& net, std::span<const double> g) {
  check_input(net, g);
  ForwardResult result;
  ForwardCache& cache = result.cache;
  cache.shape = net.shape;
  cache.nodes.reserve(net.layers.size() + 1);
  cache.nodes.emplace_back(g.begin(), g.end());
  cache.activations.resize(net.layers.size());
  cache.bases.resize(net.layers.size());
  cache.spline_sums.resize(net.layers.size());

  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const KanLayer& layer = net.layers[l];
    const std::vector<double>& x = cache.nodes[l];
    std::vector<double> next(layer.out_dim, 0.0);
    auto& acts = cache.activations[l];
    auto& bases = cache.bases[l];
    auto& sums = cache.spline_sums[l];
    acts.assign(layer.edges.size(), 0.0);
    bases.assign(layer.edges.size(), LocalBasis{});
    sums.assign(layer.edges.size(), 0.0);
    for (std::size_t out = 0; out < layer.out_dim; ++out) {
      for (std::size_t in = 0; in < layer.in_dim; ++in) {
        const std::size_t idx = out * layer.in_dim + in;
        const SplineEdge& e = layer.edges[idx];
        double phi;
        if (e.symbolic) {
          phi = (*e.symbolic)(x[in]);
        } else {
          local_basis(e.grid, x[in], bases[idx], true);
          sums[idx] = spline_sum(e, bases[idx]);
          phi = e.w_base * silu(x[in]) + e.w_spline * sums[idx];
        }
        acts[idx] = phi;
        next[out] += phi;
      }
    }
    cache.nodes.push_back(std::move(next));
  }
  result.output = cache.nodes.back();
  return result;
}

std::vector<double> evaluate(const KanNetwork& net, std::span<const double> g) {
  check_input(net, g);
  std::vector<double> x(g.begin(), g.end());
  for (const KanLayer& layer : net.layers) {
    std::vector<double> next(layer.out_dim, 0.0);
    for (std::size_t out = 0; out < layer.out_dim; ++out) {
      for (std::size_t in = 0; in < layer.in_dim; ++in) next[out] += edge_eval(layer.edge(out, in), x[in]);
    }
    x = std::move(next);
  }
  return x;
}

void backward_accumulate(const KanNetwork& net, const ForwardCache& cache, std::span<const double> upstream_grad,
                         const std::vector<std::vector<double>>& activation_grad, std::span<double> parameter_grad,
                         std::vector<double>* input_grad) {
  if (cache.shape != net.shape || cache.nodes.size() != net.layers.size() + 1) {
    throw InvalidState("forward cache does not match the network shape");
  }
  if (upstream_grad.size() != net.output_dim()) throw InvalidArgument("upstream gradient has the wrong length");
  if (parameter_grad.size() != net.parameter_count()) {
    throw InvalidArgument("parameter gradient buffer has the wrong length");
  }
  const bool with_act = !activation_grad.empty();

  // Offsets of each layer's first parameter.
  std::vector<std::size_t> layer_offset(net.layers.size() + 1, 0);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    std::size_t n = 0;
    for (const auto& e : net.layers[l].edges) n += e.parameter_count();
    layer_offset[l + 1] = layer_offset[l] + n;
  }

  std::vector<double> gout(upstream_grad.begin(), upstream_grad.end());
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const KanLayer& layer = net.layers[li];
    const std::vector<double>& x = cache.nodes[li];
    std::vector<double> gin(layer.in_dim, 0.0);
    std::size_t offset = layer_offset[li];
    for (std::size_t out = 0; out < layer.out_dim; ++out) {
      for (std::size_t in = 0; in < layer.in_dim; ++in) {
        const std::size_t idx = out * layer.in_dim + in;
        const SplineEdge& e = layer.edges[idx];
        double g = gout[out];
        if (with_act) g += activation_grad[li][idx];
        if (e.symbolic) {
          const SymbolicFn& s = *e.symbolic;
          const double z = s.a * x[in] + s.b;
          parameter_grad[offset] += g * primitive_value(s.primitive, z);
          parameter_grad[offset + 1] += g;
          gin[in] += g * s.c * primitive_derivative(s.primitive, z) * s.a;
          offset += 2;
        } else {
          const LocalBasis& basis = cache.bases[li][idx];
          double dspline = 0.0;
          for (std::size_t r = 0; r < basis.count; ++r) {
            parameter_grad[offset + basis.first + r] += g * e.w_spline * basis.values[r];
            dspline += e.coeffs[basis.first + r] * basis.derivatives[r];
          }
          const std::size_t nc = e.coeffs.size();
          parameter_grad[offset + nc] += g * silu(x[in]);
          parameter_grad[offset + nc + 1] += g * cache.spline_sums[li][idx];
          gin[in] += g * (e.w_base * silu_derivative(x[in]) + e.w_spline * dspline);
          offset += nc + 2;
        }
      }
    }
    gout = std::move(gin);
  }
  if (input_grad != nullptr) {
    if (input_grad->size() != gout.size()) input_grad->assign(gout.size(), 0.0);
    for (std::size_t i = 0; i < gout.size(); ++i) (*input_grad)[i] += gout[i];
  }
}

BackwardResult backward(const KanNetwork& net, const ForwardCache& cache, std::span<const double> upstream_grad,
                        const std::vector<std::vector<double>>& activation_grad) {
  BackwardResult r;
  r.parameter_grad.assign(net.parameter_count(), 0.0);
  r.input_grad.assign(net.input_dim(), 0.0);
  backward_accumulate(net, cache, upstream_grad, activation_grad, r.parameter_grad, &r.input_grad);
  return r;
}

std::vector<double> get_parameters(const KanNetwork& net) {
  std::vector<double> theta;
  theta.reserve(net.parameter_count());
  for (const auto& layer : net.layers) {
    for (const auto& e : layer.edges) {
      if (e.symbolic) {
        theta.push_back(e.symbolic->c);
        theta.push_back(e.symbolic->d);
      } else {
        theta.insert(theta.end(), e.coeffs.begin(), e.coeffs.end());
        theta.push_back(e.w_base);
        theta.push_back(e.w_spline);
      }
    }
  }
  return theta;
}

void set_parameters(KanNetwork& net, std::span<const double> theta) {
  if (theta.size() != net.parameter_count()) throw InvalidArgument("parameter vector has the wrong length");
  std::size_t k = 0;
  for (auto& layer : net.layers) {
    for (auto& e : layer.edges) {
      if (e.symbolic) {
        e.symbolic->c = theta[k++];
        e.symbolic->d = theta[k++];
      } else {
        for (auto& c : e.coeffs) c = theta[k++];
        e.w_base = theta[k++];
        e.w_spline = theta[k++];
      }
    }
  }
}

std::vector<char> trainable_mask(const KanNetwork& net) {
  std::vector<char> mask;
  mask.reserve(net.parameter_count());
  for (const auto& layer : net.layers) {
    for (const auto& e : layer.edges) mask.insert(mask.end(), e.parameter_count(), e.trainable ? 1 : 0);
  }
  return mask;
}

ActivationStats activation_stats(const KanNetwork& net, std::span<const double> batch_rows) {
  const std::size_t cols = net.input_dim();
  if (batch_rows.empty() || cols == 0) throw InvalidArgument("activation statistics need a non-empty batch");
  if (batch_rows.size() % cols != 0) throw InvalidArgument("batch size is not a multiple of the input width");
  const std::size_t rows = batch_rows.size() / cols;

  ActivationStats stats;
  stats.edge_mean.resize(net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) stats.edge_mean[l].assign(net.layers[l].edges.size(), 0.0);

  std::vector<double> x;
  for (std::size_t r = 0; r < rows; ++r) {
    x.assign(batch_rows.begin() + static_cast<std::ptrdiff_t>(r * cols),
             batch_rows.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols));
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      const KanLayer& layer = net.layers[l];
      std::vector<double> next(layer.out_dim, 0.0);
      for (std::size_t out = 0; out < layer.out_dim; ++out) {
        for (std::size_t in = 0; in < layer.in_dim; ++in) {
          const double phi = edge_eval(layer.edge(out, in), x[in]);
          stats.edge_mean[l][out * layer.in_dim + in] += std::abs(phi);
          next[out] += phi;
        }
      }
      x = std::move(next);
    }
  }
  const double inv = 1.0 / static_cast<double>(rows);
  for (auto& layer_means : stats.edge_mean) {
    for (auto& m : layer_means) m *= inv;
  }

  stats.node_in_max.resize(net.shape.size());
  stats.node_out_max.resize(net.shape.size());
  for (std::size_t n = 0; n < net.shape.size(); ++n) {
    stats.node_in_max[n].assign(net.shape[n], 0.0);
    stats.node_out_max[n].assign(net.shape[n], 0.0);
  }
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const KanLayer& layer = net.layers[l];
    for (std::size_t out = 0; out < layer.out_dim; ++out) {
      for (std::size_t in = 0; in < layer.in_dim; ++in) {
        const double m = stats.edge_mean[l][out * layer.in_dim + in];
        stats.node_out_max[l][in] = std::max(stats.node_out_max[l][in], m);
        stats.node_in_max[l + 1][out] = std::max(stats.node_in_max[l + 1][out], m);
      }
    }
  }
  return stats;
}

Penalty regularization_with_grad(const ActivationStats& stats, double lamb, double lamb_entropy) {
  Penalty p;
  p.d_edge_mean.resize(stats.edge_mean.size());
  for (std::size_t l = 0; l < stats.edge_mean.size(); ++l) {
    const auto& m = stats.edge_mean[l];
    auto& dm = p.d_edge_mean[l];
    dm.assign(m.size(), 0.0);
    double l1 = 0.0;
    for (double v : m) l1 += v;
    if (l1 <= 0.0) continue;
    double entropy = 0.0;
    for (double v : m) {
      if (v > 0.0) {
        const double q = v / l1;
        entropy -= q * std::log(q);
      }
    }
    p.value += lamb * (l1 + lamb_entropy * entropy);
    // dH/dm_e = -(log p_e + H) / L1; zero-mass edges get the L1 part only.
    for (std::size_t e = 0; e < m.size(); ++e) {
      double dh = 0.0;
      if (m[e] > 0.0) dh = -(std::log(m[e] / l1) + entropy) / l1;
      dm[e] = lamb * (1.0 + lamb_entropy * dh);
    }
  }
  return p;
}

double regularization(const ActivationStats& stats, double lamb, double lamb_entropy) {
  return regularization_with_grad(stats, lamb, lamb_entropy).value;
}

KanNetwork prune(const KanNetwork& net, const ActivationStats& stats, double node_threshold) {
  if (stats.node_in_max.size() != net.shape.size()) throw InvalidArgument("activation stats do not match network");
  // keep[n][i]: node i of node-layer n survives.
  std::vector<std::vector<char>> keep(net.shape.size());
  for (std::size_t n = 0; n < net.shape.size(); ++n) {
    keep[n].assign(net.shape[n], 1);
    if (n == 0 || n + 1 == net.shape.size()) continue;
    for (std::size_t i = 0; i < net.shape[n]; ++i) {
      if (stats.node_in_max[n][i] < node_threshold || stats.node_out_max[n][i] < node_threshold) keep[n][i] = 0;
    }
  }

  KanNetwork pruned = net;
  for (std::size_t n = 0; n < net.shape.size(); ++n) {
    pruned.shape[n] = static_cast<std::size_t>(std::count(keep[n].begin(), keep[n].end(), 1));
  }
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const KanLayer& src = net.layers[l];
    KanLayer& dst = pruned.layers[l];
    dst.in_dim = pruned.shape[l];
    dst.out_dim = pruned.shape[l + 1];
    dst.edges.clear();
    for (std::size_t out = 0; out < src.out_dim; ++out) {
      if (!keep[l + 1][out]) continue;
      for (std::size_t in = 0; in < src.in_dim; ++in) {
        if (keep[l][in]) dst.edges.push_back(src.edge(out, in));
      }
    }
  }
  return pruned;
}

}  // namespace kansid
