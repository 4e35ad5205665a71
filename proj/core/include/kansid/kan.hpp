#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kansid/spline.hpp"

namespace kansid {

/// Closed-form primitives an edge can be fixed to.
enum class Primitive { kZero, kConstant, kLinear, kSquare, kSine, kExponential };

inline constexpr Primitive kAllPrimitives[] = {Primitive::kZero,   Primitive::kConstant, Primitive::kLinear,
                                               Primitive::kSquare, Primitive::kSine,     Primitive::kExponential};

[[nodiscard]] std::string_view primitive_name(Primitive p) noexcept;
/// Throws InvalidArgument for unknown names.
[[nodiscard]] Primitive primitive_from_name(std::string_view name);
/// True for primitives whose composition stays affine (zero, constant, linear).
[[nodiscard]] bool is_affine(Primitive p) noexcept;
[[nodiscard]] double primitive_value(Primitive p, double z) noexcept;
[[nodiscard]] double primitive_derivative(Primitive p, double z) noexcept;

/// phi(x) = c * f(a*x + b) + d
struct SymbolicFn {
  Primitive primitive = Primitive::kZero;
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;

  [[nodiscard]] double operator()(double x) const noexcept { return c * primitive_value(primitive, a * x + b) + d; }
};

/// One learnable univariate function on a network edge:
/// w_base * silu(x) + w_spline * sum_i coeffs[i] * B_i(x), unless a symbolic
/// override is set, in which case only the override is evaluated.
///
/// `trainable` covers the spline scalars for spline edges and (c, d) for
/// symbolic edges.
struct SplineEdge {
  SplineGrid grid;
  std::vector<double> coeffs;
  double w_base = 0.0;
  double w_spline = 1.0;
  std::optional<SymbolicFn> symbolic;
  bool trainable = true;

  /// Number of entries this edge contributes to the flat parameter vector.
  [[nodiscard]] std::size_t parameter_count() const noexcept {
    return symbolic ? 2 : coeffs.size() + 2;
  }
};

struct KanLayer {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<SplineEdge> edges;  ///< row-major: edges[out * in_dim + in]

  [[nodiscard]] SplineEdge& edge(std::size_t out, std::size_t in) { return edges[out * in_dim + in]; }
  [[nodiscard]] const SplineEdge& edge(std::size_t out, std::size_t in) const { return edges[out * in_dim + in]; }
};

struct KanNetwork {
  std::vector<std::size_t> shape;
  std::vector<KanLayer> layers;
  std::vector<std::string> input_labels;
  std::string output_label;
  std::uint64_t seed = 0;
  double ts_seconds = 0.0;

  [[nodiscard]] std::size_t input_dim() const noexcept { return shape.empty() ? 0 : shape.front(); }
  [[nodiscard]] std::size_t output_dim() const noexcept { return shape.empty() ? 0 : shape.back(); }
  [[nodiscard]] std::size_t parameter_count() const noexcept;
};

struct NetworkInit {
  int grid_intervals = 5;
  int grid_order = 3;
  double coeff_noise = 0.1;
};

/// Fresh network with seeded initialization. Every edge starts on the grid
/// [-1, 1]; callers refit grids to their data with `set_edge_grids`.
[[nodiscard]] KanNetwork make_network(std::vector<std::size_t> shape, std::vector<std::string> input_labels,
                                      std::uint64_t seed, const NetworkInit& init = {});

/// Replaces the grid of every edge in layer `layer` fed by node `in`. Spline
/// coefficients are kept as they are (the function changes with the grid).
void set_edge_grids(KanNetwork& net, std::size_t layer, std::size_t in, const SplineGrid& grid);

[[nodiscard]] double silu(double x) noexcept;
[[nodiscard]] double silu_derivative(double x) noexcept;

[[nodiscard]] double edge_eval(const SplineEdge& edge, double x);

/// Everything backward needs from one forward evaluation.
struct ForwardCache {
  std::vector<std::size_t> shape;
  /// nodes[l] holds the inputs of layer l; nodes.back() is the network output.
  std::vector<std::vector<double>> nodes;
  /// activations[l][out * in_dim + in] = phi_{out,in}(nodes[l][in]).
  std::vector<std::vector<double>> activations;
  /// Local spline bases per edge, same layout as activations.
  std::vector<std::vector<LocalBasis>> bases;
  /// Spline sum (without w_spline) per edge.
  std::vector<std::vector<double>> spline_sums;
};

struct ForwardResult {
  std::vector<double> output;
  ForwardCache cache;
};

[[nodiscard]] ForwardResult forward(const KanNetwork& net, std::span<const double> g);
/// Output-only evaluation without a cache.
[[nodiscard]] std::vector<double> evaluate(const KanNetwork& net, std::span<const double> g);

struct BackwardResult {
  std::vector<double> parameter_grad;  ///< one entry per flat parameter
  std::vector<double> input_grad;
};

/// Reverse-mode pass. `activation_grad`, when non-empty, adds a direct
/// gradient on each edge activation (layout as ForwardCache::activations);
/// the objective uses it for the sparsity penalty.
[[nodiscard]] BackwardResult backward(const KanNetwork& net, const ForwardCache& cache,
                                      std::span<const double> upstream_grad,
                                      const std::vector<std::vector<double>>& activation_grad = {});

/// Accumulating variant of `backward` used in the training loop.
void backward_accumulate(const KanNetwork& net, const ForwardCache& cache, std::span<const double> upstream_grad,
                         const std::vector<std::vector<double>>& activation_grad, std::span<double> parameter_grad,
                         std::vector<double>* input_grad);

/// Flat parameter vector: per layer, per edge (row-major), either
/// [coeffs..., w_base, w_spline] for spline edges or [c, d] for symbolic ones.
[[nodiscard]] std::vector<double> get_parameters(const KanNetwork& net);
void set_parameters(KanNetwork& net, std::span<const double> theta);
/// 1 where the entry is currently trainable, 0 otherwise.
[[nodiscard]] std::vector<char> trainable_mask(const KanNetwork& net);

struct ActivationStats {
  /// edge_mean[l][out * in_dim + in] = mean |phi| over the batch.
  std::vector<std::vector<double>> edge_mean;
  /// Per node layer (shape.size() entries): largest incoming / outgoing edge mean.
  std::vector<std::vector<double>> node_in_max;
  std::vector<std::vector<double>> node_out_max;
};

[[nodiscard]] ActivationStats activation_stats(const KanNetwork& net, std::span<const double> batch_rows);

/// L1 + entropy penalty over per-layer edge means, plus its derivative with
/// respect to every edge mean (same layout as `edge_mean`).
struct Penalty {
  double value = 0.0;
  std::vector<std::vector<double>> d_edge_mean;
};

[[nodiscard]] Penalty regularization_with_grad(const ActivationStats& stats, double lamb, double lamb_entropy);
[[nodiscard]] double regularization(const ActivationStats& stats, double lamb, double lamb_entropy);

/// Removes hidden nodes whose largest incoming or outgoing edge mean is
/// below `node_threshold`. Input and output nodes are kept.
[[nodiscard]] KanNetwork prune(const KanNetwork& net, const ActivationStats& stats, double node_threshold);

/// Human-readable "layer,out,in" edge identifier.
[[nodiscard]] std::string edge_id(std::size_t layer, std::size_t out, std::size_t in);

}  // namespace kansid
