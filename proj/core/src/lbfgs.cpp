#include "kansid/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "kansid/error.hpp"

namespace kansid {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

bool all_finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

struct CurvaturePair {
  std::vector<double> s;
  std::vector<double> y;
  double rho;
};

/// Evaluates the objective along x + alpha*d, keeping the latest trial point.
class LineFunction {
 public:
  LineFunction(const Objective& f, const std::vector<double>& x, const std::vector<double>& d,
               const std::vector<char>& mask, int& evaluations)
      : f_(f), x_(x), d_(d), mask_(mask), evaluations_(evaluations), trial_(x.size()), grad_(x.size()) {}

  struct Sample {
    double alpha;
    double phi;
    double dphi;
    bool finite;
  };

  Sample operator()(double alpha) {
    for (std::size_t i = 0; i < x_.size(); ++i) trial_[i] = x_[i] + alpha * d_[i];
    const double phi = f_(trial_, grad_);
    ++evaluations_;
    if (!mask_.empty()) {
      for (std::size_t i = 0; i < grad_.size(); ++i) {
        if (!mask_[i]) grad_[i] = 0.0;
      }
    }
    const bool finite = std::isfinite(phi) && all_finite(grad_);
    return {alpha, phi, finite ? dot(grad_, d_) : 0.0, finite};
  }

  [[nodiscard]] const std::vector<double>& trial() const { return trial_; }
  [[nodiscard]] const std::vector<double>& grad() const { return grad_; }

 private:
  const Objective& f_;
  const std::vector<double>& x_;
  const std::vector<double>& d_;
  const std::vector<char>& mask_;
  int& evaluations_;
  std::vector<double> trial_;
  std::vector<double> grad_;
};

/// Minimizer of the cubic through (a, fa, ga) and (b, fb, gb), or NaN.
double cubic_minimizer(double a, double fa, double ga, double b, double fb, double gb) {
  const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - ga * gb;
  if (disc < 0.0) return std::nan("");
  const double d2 = std::copysign(std::sqrt(disc), b - a);
  return b - (b - a) * (gb + d2 - d1) / (gb - ga + 2.0 * d2);
}

struct LineSearchOutcome {
  bool ok = false;
  LineFunction::Sample accepted{};
};

LineSearchOutcome strong_wolfe(LineFunction& line, double phi0, double dphi0, double alpha0,
                               const LbfgsOptions& opt) {
  int budget = opt.max_line_search_evals;
  LineSearchOutcome out;

  auto sufficient = [&](const LineFunction::Sample& s) { return s.phi <= phi0 + opt.c1 * s.alpha * dphi0; };
  auto curvature = [&](const LineFunction::Sample& s) { return std::abs(s.dphi) <= -opt.c2 * dphi0; };

  auto zoom = [&](LineFunction::Sample lo, LineFunction::Sample hi) {
    while (budget > 0) {
      const double width = hi.alpha - lo.alpha;
      double alpha = std::nan("");
      if (hi.finite) alpha = cubic_minimizer(lo.alpha, lo.phi, lo.dphi, hi.alpha, hi.phi, hi.dphi);
      const double low_bound = std::min(lo.alpha, hi.alpha) + 0.1 * std::abs(width);
      const double high_bound = std::max(lo.alpha, hi.alpha) - 0.1 * std::abs(width);
      if (!std::isfinite(alpha) || alpha < low_bound || alpha > high_bound) alpha = lo.alpha + 0.5 * width;
      if (std::abs(width) < 1e-16 * std::max(1.0, std::abs(lo.alpha))) return;
      const auto s = line(alpha);
      --budget;
      if (!s.finite || !sufficient(s) || s.phi >= lo.phi) {
        hi = s;
      } else {
        if (curvature(s)) {
          out.ok = true;
          out.accepted = s;
          return;
        }
        if (s.dphi * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = s;
      }
    }
  };

  LineFunction::Sample prev{0.0, phi0, dphi0, true};
  double alpha = alpha0;
  for (int i = 0; budget > 0; ++i) {
    const auto s = line(alpha);
    --budget;
    if (!s.finite || !sufficient(s) || (i > 0 && s.phi >= prev.phi)) {
      zoom(prev, s);
      return out;
    }
    if (curvature(s)) {
      out.ok = true;
      out.accepted = s;
      return out;
    }
    if (s.dphi >= 0.0) {
      zoom(s, prev);
      return out;
    }
    prev = s;
    alpha *= 4.0;
  }
  return out;
}

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& f, std::vector<double> x0, const LbfgsOptions& options,
                           const std::function<void(const LbfgsResult&)>& on_iteration) {
  if (options.memory < 1) throw InvalidArgument("LBFGS memory must be >= 1");
  if (!(options.c1 > 0.0 && options.c1 < options.c2 && options.c2 < 1.0)) {
    throw InvalidArgument("line-search constants must satisfy 0 < c1 < c2 < 1");
  }
  if (!options.mask.empty() && options.mask.size() != x0.size()) throw InvalidArgument("LBFGS mask has the wrong length");

  const std::size_t n = x0.size();
  LbfgsResult res;
  res.x = std::move(x0);
  std::vector<double> g(n, 0.0);
  auto apply_mask = [&](std::vector<double>& v) {
    if (options.mask.empty()) return;
    for (std::size_t i = 0; i < n; ++i) {
      if (!options.mask[i]) v[i] = 0.0;
    }
  };

  res.f = f(res.x, g);
  ++res.evaluations;
  apply_mask(g);
  if (!std::isfinite(res.f) || !all_finite(g)) {
    throw TrainingDiverged("objective is not finite at the starting point", res.x);
  }
  res.gradient_norm = norm(g);
  if (res.gradient_norm <= options.gradient_tolerance || n == 0) {
    res.converged = true;
    return res;
  }

  std::deque<CurvaturePair> memory;
  std::vector<double> d(n);
  std::vector<double> alpha_buf;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    // Two-loop recursion: d = -H g.
    std::vector<double> q = g;
    alpha_buf.assign(memory.size(), 0.0);
    for (std::size_t m = memory.size(); m-- > 0;) {
      alpha_buf[m] = memory[m].rho * dot(memory[m].s, q);
      for (std::size_t i = 0; i < n; ++i) q[i] -= alpha_buf[m] * memory[m].y[i];
    }
    double gamma = 1.0;
    if (!memory.empty()) {
      const auto& last = memory.back();
      gamma = dot(last.s, last.y) / dot(last.y, last.y);
    }
    for (std::size_t i = 0; i < n; ++i) q[i] *= gamma;
    for (std::size_t m = 0; m < memory.size(); ++m) {
      const double beta = memory[m].rho * dot(memory[m].y, q);
      for (std::size_t i = 0; i < n; ++i) q[i] += memory[m].s[i] * (alpha_buf[m] - beta);
    }
    for (std::size_t i = 0; i < n; ++i) d[i] = -q[i];
    apply_mask(d);

    double dphi0 = dot(g, d);
    if (!(dphi0 < 0.0)) {
      memory.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      dphi0 = dot(g, d);
    }
    const double alpha0 = memory.empty() && iter == 0 ? std::min(1.0, 1.0 / res.gradient_norm) : 1.0;

    LineFunction line(f, res.x, d, options.mask, res.evaluations);
    LineSearchOutcome ls = strong_wolfe(line, res.f, dphi0, alpha0, options);

    LbfgsStep step;
    step.f_before = res.f;
    step.slope_before = dphi0;
    std::vector<double> x_new;
    std::vector<double> g_new;
    double f_new = res.f;
    if (ls.ok) {
      // The last evaluated trial is the accepted point.
      x_new = line.trial();
      g_new = line.grad();
      f_new = ls.accepted.phi;
      step.step = ls.accepted.alpha;
      step.slope_after = ls.accepted.dphi;
    } else {
      ++res.line_search_failures;
      memory.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      dphi0 = dot(g, d);
      LineFunction sd(f, res.x, d, options.mask, res.evaluations);
      double alpha = std::min(1.0, 1.0 / res.gradient_norm);
      bool found = false;
      for (int k = 0; k < 60; ++k, alpha *= 0.5) {
        const auto s = sd(alpha);
        if (s.finite && s.phi <= res.f + options.c1 * alpha * dphi0 && s.phi < res.f) {
          x_new = sd.trial();
          g_new = sd.grad();
          f_new = s.phi;
          step.step = alpha;
          step.slope_before = dphi0;
          step.slope_after = s.dphi;
          found = true;
          break;
        }
      }
      step.fallback = true;
      if (!found) break;  // no descent possible at working precision
    }
    if (!std::isfinite(f_new) || !all_finite(g_new)) {
      throw TrainingDiverged("objective became non-finite during LBFGS", res.x);
    }

    std::vector<double> s(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - res.x[i];
      y[i] = g_new[i] - g[i];
    }
    const double sy = dot(s, y);
    if (sy > 1e-12 * norm(s) * norm(y) && sy > 0.0) {
      memory.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (memory.size() > static_cast<std::size_t>(options.memory)) memory.pop_front();
    }

    res.x = std::move(x_new);
    g = std::move(g_new);
    res.f = f_new;
    res.gradient_norm = norm(g);
    res.iterations = iter + 1;
    step.f_after = f_new;
    res.steps.push_back(step);
    if (on_iteration) on_iteration(res);
    if (res.gradient_norm <= options.gradient_tolerance) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace kansid
