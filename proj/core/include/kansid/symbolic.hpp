#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kansid/kan.hpp"

namespace kansid {

struct SymbolicCandidate {
  SymbolicFn fn;
  /// Coefficient of determination; empty when the targets have zero variance.
  std::optional<double> r2;
};

/// Fit y ~ c*f(a*x+b)+d for one primitive. (c, d) come from linear least
/// squares; for the non-affine primitives (a, b) are found by a coarse-to-fine
/// grid search scaled to the sample range.
[[nodiscard]] SymbolicCandidate fit_primitive(Primitive p, std::span<const double> xs, std::span<const double> ys);

/// Every primitive of `library` fitted and ranked by R^2 (descending, ties to
/// the simpler primitive). With zero-variance targets zero/constant lead.
[[nodiscard]] std::vector<SymbolicCandidate> suggest_symbolic(std::span<const double> xs, std::span<const double> ys,
                                                              std::span<const Primitive> library = kAllPrimitives);

/// Samples (x, phi(x)) of one edge at the given inputs.
[[nodiscard]] std::vector<double> edge_samples(const KanNetwork& net, std::size_t layer, std::size_t out,
                                               std::size_t in, std::span<const double> xs);

/// Replaces edge (layer, out, in) by the best fit of `p` to the samples and
/// freezes it. Returns the achieved R^2 (1 for zero-variance data fitted
/// exactly, 0 otherwise).
double fix_symbolic(KanNetwork& net, std::size_t layer, std::size_t out, std::size_t in, Primitive p,
                    std::span<const double> xs, std::span<const double> ys);

/// Fixes every first-layer edge fed by `input_index` to the zero function.
[[nodiscard]] KanNetwork fix_input_zero(const KanNetwork& net, std::size_t input_index);
void fix_input_zero_in_place(KanNetwork& net, std::size_t input_index);

/// Affine equation  output = sum_i slopes[i] * input_i + constant.
struct SymbolicEquation {
  std::string state_label;
  std::vector<std::string> input_labels;
  std::vector<double> slopes;
  double constant = 0.0;
  bool scale_applied = false;
  /// R^2 of each symbolic fit, keyed by edge id "layer,out,in".
  std::map<std::string, double> edge_r2;

  [[nodiscard]] double evaluate(std::span<const double> g) const;
  /// e.g. "1179.94*i_L - 11840*v_C + 0*D + 160"
  [[nodiscard]] std::string to_string(int precision = 6) const;
};

/// Folds a fully fixed affine network into one equation (scale_applied =
/// false). Throws NotSymbolic listing the edges that are splines or
/// non-affine.
[[nodiscard]] SymbolicEquation to_equation(const KanNetwork& net);

/// Multiplies every slope and the constant by 1/ts and marks the equation as
/// rescaled.
[[nodiscard]] SymbolicEquation rescale_by_sample_period(const SymbolicEquation& eq, double ts_seconds);

}  // namespace kansid
