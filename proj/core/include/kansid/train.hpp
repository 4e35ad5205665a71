#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "kansid/dataset.hpp"
#include "kansid/kan.hpp"

namespace kansid {

enum class Reduction { kSum, kMean };

[[nodiscard]] std::string_view reduction_name(Reduction r) noexcept;
[[nodiscard]] Reduction reduction_from_name(std::string_view name);

/// log(cosh(r)) evaluated as |r| + log1p(exp(-2|r|)) - log 2.
[[nodiscard]] double logcosh(double r) noexcept;
/// Sum or mean of logcosh over the residuals; throws on empty input.
[[nodiscard]] double logcosh(std::span<const double> residuals, Reduction reduction);

struct TrainConfig {
  int steps = 60;
  double lamb = 0.01;
  double lamb_entropy = 10.0;
  int lbfgs_memory = 10;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  int max_line_search_evals = 25;
  double gradient_tolerance = 1e-9;
  Reduction loss_reduction = Reduction::kMean;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainReport {
  std::vector<double> total_loss;  ///< one entry per LBFGS iteration
  std::vector<double> data_loss;
  std::vector<double> penalty;
  double initial_loss = 0.0;
  double final_gradient_norm = 0.0;
  double wall_seconds = 0.0;
  int line_search_failures = 0;
  int evaluations = 0;
};

struct ObjectiveValue {
  double loss = 0.0;
  double data_loss = 0.0;
  double penalty = 0.0;
  std::vector<double> gradient;  ///< one entry per flat parameter
};

/// Log-cosh data loss plus the sparsity penalty, with the exact gradient over
/// every flat parameter (masking is left to the optimizer).
[[nodiscard]] ObjectiveValue objective(const KanNetwork& net, const SidDataset& dataset, const TrainConfig& config);

/// Full-batch LBFGS over the trainable parameters of a copy of `net`.
[[nodiscard]] std::pair<KanNetwork, TrainReport> lbfgs_train(const KanNetwork& net, const SidDataset& dataset,
                                                             const TrainConfig& config);

/// Minimum-norm least-squares solve for the base weights and spline
/// coefficients of every trainable spline edge of a single-layer network,
/// holding the other edges fixed. Returns false (leaving `net` untouched)
/// for deeper networks or when nothing is trainable.
bool least_squares_fit(KanNetwork& net, const SidDataset& dataset);

}  // namespace kansid
