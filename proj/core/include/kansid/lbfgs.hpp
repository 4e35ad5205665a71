#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace kansid {

/// f(x, grad) -> value; must fill `grad`.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct LbfgsOptions {
  int max_iterations = 60;
  int memory = 10;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search_evals = 25;
  double gradient_tolerance = 1e-9;
  /// Entries with mask 0 are held fixed (their gradient is ignored).
  std::vector<char> mask;
};

/// One accepted iteration.
struct LbfgsStep {
  double step = 0.0;
  double f_before = 0.0;
  double f_after = 0.0;
  double slope_before = 0.0;  ///< directional derivative at step 0
  double slope_after = 0.0;   ///< directional derivative at the accepted step
  bool fallback = false;      ///< steepest-descent backtracking was used
};

struct LbfgsResult {
  std::vector<double> x;
  double f = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  int evaluations = 0;
  int line_search_failures = 0;
  bool converged = false;
  std::vector<LbfgsStep> steps;
};

/// Limited-memory BFGS with the two-loop recursion and a strong-Wolfe line
/// search (bracketing + cubic zoom). When the line search fails, one
/// steepest-descent Armijo backtracking step is taken instead, the failure is
/// counted and the curvature memory is cleared.
///
/// Throws TrainingDiverged carrying the last accepted point if the objective
/// returns a non-finite value or gradient at an accepted point.
[[nodiscard]] LbfgsResult lbfgs_minimize(const Objective& f, std::vector<double> x0, const LbfgsOptions& options,
                                         const std::function<void(const LbfgsResult&)>& on_iteration = {});

}  // namespace kansid
