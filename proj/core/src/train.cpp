#include "kansid/train.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "kansid/error.hpp"
#include "kansid/lbfgs.hpp"

namespace kansid {

std::string_view reduction_name(Reduction r) noexcept { return r == Reduction::kSum ? "sum" : "mean"; }

Reduction reduction_from_name(std::string_view name) {
  if (name == "sum") return Reduction::kSum;
  if (name == "mean") return Reduction::kMean;
  throw InvalidArgument("unknown loss reduction '" + std::string(name) + "' (expected sum|mean)");
}

double logcosh(double r) noexcept {
  const double a = std::abs(r);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

double logcosh(std::span<const double> residuals, Reduction reduction) {
  if (residuals.empty()) throw InvalidArgument("logcosh of an empty residual set");
  double s = 0.0;
  for (double r : residuals) s += logcosh(r);
  return reduction == Reduction::kMean ? s / static_cast<double>(residuals.size()) : s;
}

void TrainConfig::validate() const {
  if (steps < 1) throw InvalidArgument("training steps must be >= 1");
  if (!(lamb >= 0.0)) throw InvalidArgument("lamb must be >= 0");
  if (!(lamb_entropy >= 0.0)) throw InvalidArgument("lamb_entropy must be >= 0");
  if (!(wolfe_c1 > 0.0 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0)) {
    throw InvalidArgument("Wolfe constants must satisfy 0 < c1 < c2 < 1");
  }
  if (lbfgs_memory < 1) throw InvalidArgument("lbfgs_memory must be >= 1");
  if (max_line_search_evals < 1) throw InvalidArgument("max line-search evaluations must be >= 1");
}

namespace {

void check_dims(const KanNetwork& net, const SidDataset& dataset) {
  if (dataset.cols() != net.input_dim()) {
    std::ostringstream msg;
    msg << "dataset has " << dataset.cols() << " input columns, network expects " << net.input_dim();
    throw InvalidArgument(msg.str());
  }
  if (net.output_dim() != 1) throw InvalidArgument("derivative fitting needs a single-output network");
  if (dataset.rows() == 0) throw InvalidArgument("dataset is empty");
}

}  // namespace

ObjectiveValue objective(const KanNetwork& net, const SidDataset& dataset, const TrainConfig& config) {
  check_dims(net, dataset);
  const std::size_t rows = dataset.rows();
  const double weight = config.loss_reduction == Reduction::kMean ? 1.0 / static_cast<double>(rows) : 1.0;
  const bool with_penalty = config.lamb > 0.0;

  ObjectiveValue out;
  out.gradient.assign(net.parameter_count(), 0.0);

  // Penalty gradient on each activation: dP/dmean_e * sign(phi) / N.
  Penalty penalty;
  if (with_penalty) {
    const ActivationStats stats = activation_stats(net, dataset.inputs);
    penalty = regularization_with_grad(stats, config.lamb, config.lamb_entropy);
    out.penalty = penalty.value;
  }
  std::vector<std::vector<double>> act_grad;
  if (with_penalty) {
    act_grad.resize(net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) act_grad[l].assign(net.layers[l].edges.size(), 0.0);
  }
  const double inv_rows = 1.0 / static_cast<double>(rows);

  double data_sum = 0.0;
  double upstream[1];
  for (std::size_t r = 0; r < rows; ++r) {
    const ForwardResult fr = forward(net, dataset.row(r));
    const double residual = fr.output[0] - dataset.targets[r];
    data_sum += logcosh(residual);
    upstream[0] = weight * std::tanh(residual);
    if (with_penalty) {
      for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto& acts = fr.cache.activations[l];
        for (std::size_t e = 0; e < acts.size(); ++e) {
          const double sgn = acts[e] > 0.0 ? 1.0 : (acts[e] < 0.0 ? -1.0 : 0.0);
          act_grad[l][e] = penalty.d_edge_mean[l][e] * sgn * inv_rows;
        }
      }
    }
    backward_accumulate(net, fr.cache, upstream, act_grad, out.gradient, nullptr);
  }
  out.data_loss = data_sum * weight;
  out.loss = out.data_loss + out.penalty;
  return out;
}

std::pair<KanNetwork, TrainReport> lbfgs_train(const KanNetwork& net, const SidDataset& dataset,
                                               const TrainConfig& config) {
  config.validate();
  check_dims(net, dataset);
  const auto started = std::chrono::steady_clock::now();

  KanNetwork work = net;
  TrainReport report;
  double last_data = 0.0;
  double last_penalty = 0.0;

  Objective f = [&](std::span<const double> theta, std::span<double> grad) {
    set_parameters(work, theta);
    ObjectiveValue v = objective(work, dataset, config);
    std::copy(v.gradient.begin(), v.gradient.end(), grad.begin());
    last_data = v.data_loss;
    last_penalty = v.penalty;
    return v.loss;
  };

  LbfgsOptions opt;
  opt.max_iterations = config.steps;
  opt.memory = config.lbfgs_memory;
  opt.c1 = config.wolfe_c1;
  opt.c2 = config.wolfe_c2;
  opt.max_line_search_evals = config.max_line_search_evals;
  opt.gradient_tolerance = config.gradient_tolerance;
  opt.mask = trainable_mask(net);

  const std::vector<double> theta0 = get_parameters(net);
  // The objective at theta0 is evaluated first; record its split for the report.
  bool first = true;
  Objective tracked = [&](std::span<const double> theta, std::span<double> grad) {
    const double v = f(theta, grad);
    if (first) {
      report.initial_loss = v;
      first = false;
    }
    return v;
  };

  // The data/penalty split of the accepted point is recomputed after each
  // iteration: the last objective call is not always the accepted one.
  auto on_iter = [&](const LbfgsResult& r) {
    set_parameters(work, r.x);
    const ObjectiveValue v = objective(work, dataset, config);
    report.total_loss.push_back(r.f);
    report.data_loss.push_back(v.data_loss);
    report.penalty.push_back(v.penalty);
  };

  const bool anything_trainable = std::any_of(opt.mask.begin(), opt.mask.end(), [](char m) { return m != 0; });
  LbfgsResult result;
  if (anything_trainable) {
    result = lbfgs_minimize(tracked, theta0, opt, on_iter);
  } else {
    std::vector<double> g(theta0.size());
    result.x = theta0;
    result.f = tracked(theta0, g);
  }
  set_parameters(work, result.x);

  report.final_gradient_norm = result.gradient_norm;
  report.line_search_failures = result.line_search_failures;
  report.evaluations = result.evaluations;
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return {std::move(work), std::move(report)};
}

bool least_squares_fit(KanNetwork& net, const SidDataset& dataset) {
  if (net.layers.size() != 1 || net.shape.back() != 1) return false;
  KanLayer& layer = net.layers.front();
  if (dataset.cols() != layer.in_dim) throw InvalidArgument("dataset width does not match the network input");

  std::vector<std::size_t> free_edges;
  std::vector<Eigen::Index> offsets;
  Eigen::Index cols = 0;
  for (std::size_t i = 0; i < layer.in_dim; ++i) {
    const SplineEdge& e = layer.edge(0, i);
    if (e.symbolic || !e.trainable) continue;
    free_edges.push_back(i);
    offsets.push_back(cols);
    cols += 1 + static_cast<Eigen::Index>(e.coeffs.size());
  }
  if (free_edges.empty()) return false;

  const auto rows = static_cast<Eigen::Index>(dataset.rows());
  Eigen::MatrixXd design = Eigen::MatrixXd::Zero(rows, cols);
  Eigen::VectorXd rhs(rows);
  LocalBasis basis;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto x = dataset.row(static_cast<std::size_t>(r));
    double fixed = 0.0;
    for (std::size_t i = 0; i < layer.in_dim; ++i) {
      const SplineEdge& e = layer.edge(0, i);
      if (e.symbolic || !e.trainable) fixed += edge_eval(e, x[i]);
    }
    rhs(r) = dataset.targets[static_cast<std::size_t>(r)] - fixed;
    for (std::size_t k = 0; k < free_edges.size(); ++k) {
      const std::size_t i = free_edges[k];
      const SplineEdge& e = layer.edge(0, i);
      design(r, offsets[k]) = silu(x[i]);
      local_basis(e.grid, x[i], basis, false);
      for (std::size_t j = 0; j < basis.count; ++j) {
        design(r, offsets[k] + 1 + static_cast<Eigen::Index>(basis.first + j)) = basis.values[j];
      }
    }
  }

  // Equilibrate columns so the rank decision is scale free.
  Eigen::VectorXd norms = design.colwise().norm().transpose();
  for (Eigen::Index c = 0; c < cols; ++c) {
    if (norms(c) == 0.0) norms(c) = 1.0;
    design.col(c) /= norms(c);
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  cod.setThreshold(1e-12);
  cod.compute(design);
  Eigen::VectorXd sol = cod.solve(rhs);
  if (!sol.allFinite()) return false;
  sol = sol.cwiseQuotient(norms);

  for (std::size_t k = 0; k < free_edges.size(); ++k) {
    SplineEdge& e = layer.edge(0, free_edges[k]);
    if (e.w_spline == 0.0) e.w_spline = 1.0;
    e.w_base = sol(offsets[k]);
    for (std::size_t j = 0; j < e.coeffs.size(); ++j) {
      e.coeffs[j] = sol(offsets[k] + 1 + static_cast<Eigen::Index>(j)) / e.w_spline;
    }
  }
  return true;
}

}  // namespace kansid
