#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "kansid/error.hpp"
#include "kansid/lbfgs.hpp"
#include "kansid/symbolic.hpp"
#include "kansid/train.hpp"
#include "oracles.hpp"

using namespace kansid;
using Catch::Matchers::WithinAbs;

namespace {

SidDataset affine_dataset(std::size_t rows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SidDataset ds;
  ds.input_labels = {"i_L", "v_C", "D"};
  ds.state_label = "i_L";
  ds.ts_seconds = 25e-6;
  for (std::size_t r = 0; r < rows; ++r) {
    const double a = u(rng), b = u(rng), c = u(rng);
    ds.inputs.insert(ds.inputs.end(), {a, b, c});
    ds.targets.push_back(0.3 * a - 0.2 * b + 0.1 * c + 0.05);
  }
  return ds;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("logcosh", "[optimize]") {
  CHECK(logcosh(std::vector<double>{0.0, 0.0, 0.0}, Reduction::kSum) == 0.0);
  CHECK_THAT(logcosh(std::vector<double>{1.0, -1.0}, Reduction::kSum), WithinAbs(0.867561, 1e-6));
  CHECK_THAT(logcosh(std::vector<double>{1.0, -1.0}, Reduction::kMean), WithinAbs(std::log(std::cosh(1.0)), 1e-15));
  CHECK_THAT(logcosh(std::vector<double>{20.0}, Reduction::kSum), WithinAbs(20.0 - std::log(2.0), 1e-9));
  CHECK(std::isfinite(logcosh(1e6)));
  REQUIRE_THROWS_AS(logcosh(std::vector<double>{}, Reduction::kMean), InvalidArgument);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  for (int i = 0; i < 1000; ++i) {
    const double r = u(rng);
    CHECK(logcosh(r) == logcosh(-r));
    CHECK(logcosh(r) > 0.0);
  }
  for (double r = -0.5; r <= 0.5; r += 0.01) {
    CHECK(std::abs(logcosh(r) - r * r / 2.0) <= std::pow(r, 4) / 12.0 + 1e-17);
  }
  CHECK(reduction_from_name(reduction_name(Reduction::kSum)) == Reduction::kSum);
}

TEST_CASE("training objective", "[optimize]") {
  TrainConfig cfg;
  cfg.lamb = 0.0;

  SECTION("exact fit gives zero loss and gradient") {
    KanNetwork net = make_network({3, 1}, {"i_L", "v_C", "D"}, 4);
    SidDataset ds = affine_dataset(50, 2);
    for (std::size_t r = 0; r < ds.rows(); ++r) ds.targets[r] = evaluate(net, ds.row(r))[0];
    const ObjectiveValue v = objective(net, ds, cfg);
    CHECK(v.loss == 0.0);
    CHECK(norm(v.gradient) <= 1e-12);
  }
  SECTION("gradient matches finite differences of the data loss") {
    const KanNetwork net = make_network({3, 2, 1}, {"i_L", "v_C", "D"}, 4);
    const SidDataset ds = affine_dataset(30, 3);
    const ObjectiveValue v = objective(net, ds, cfg);
    const auto theta = get_parameters(net);
    auto f = [&](const std::vector<double>& th) {
      KanNetwork copy = net;
      set_parameters(copy, th);
      std::vector<double> res;
      for (std::size_t r = 0; r < ds.rows(); ++r) res.push_back(evaluate(copy, ds.row(r))[0] - ds.targets[r]);
      return logcosh(res, Reduction::kMean);
    };
    for (std::size_t p = 0; p < theta.size(); ++p) {
      CHECK(oracle::rel_err(v.gradient[p], oracle::central_diff(f, theta, p, 1e-6), 1e-8) <= 1e-5);
    }
  }
  SECTION("penalty gradient matches finite differences") {
    TrainConfig pen;
    const KanNetwork net = make_network({3, 2, 1}, {"i_L", "v_C", "D"}, 7);
    const SidDataset ds = affine_dataset(30, 3);
    const ObjectiveValue v = objective(net, ds, pen);
    CHECK(v.penalty > 0.0);
    const auto theta = get_parameters(net);
    auto f = [&](const std::vector<double>& th) {
      KanNetwork copy = net;
      set_parameters(copy, th);
      return objective(copy, ds, pen).loss;
    };
    for (std::size_t p = 0; p < theta.size(); ++p) {
      CHECK(oracle::rel_err(v.gradient[p], oracle::central_diff(f, theta, p, 1e-7), 1e-6) <= 1e-4);
    }
  }
  SECTION("zero network pays no penalty") {
    TrainConfig pen;
    KanNetwork net = make_network({3, 1}, {"i_L", "v_C", "D"}, 1);
    for (auto& e : net.layers[0].edges) e.symbolic = SymbolicFn{Primitive::kZero, 1, 0, 0, 0};
    const SidDataset ds = affine_dataset(40, 5);
    const ObjectiveValue v = objective(net, ds, pen);
    CHECK(v.penalty == 0.0);
    CHECK_THAT(v.loss, WithinAbs(logcosh(ds.targets, Reduction::kMean), 1e-15));
  }
  SECTION("dimension mismatch") {
    const KanNetwork net = make_network({2, 1}, {"a", "b"}, 1);
    REQUIRE_THROWS_AS(objective(net, affine_dataset(5, 1), cfg), InvalidArgument);
  }
}

TEST_CASE("lbfgs on analytic surrogates", "[optimize]") {
  SECTION("quadratic") {
    const std::vector<double> target{1.0, -2.0, 3.5, 0.25};
    const Objective f = [&](std::span<const double> x, std::span<double> g) {
      double v = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        g[i] = x[i] - target[i];
        v += 0.5 * g[i] * g[i];
      }
      return v;
    };
    LbfgsOptions opt;
    opt.max_iterations = 3;
    const LbfgsResult r = lbfgs_minimize(f, std::vector<double>(4, 0.0), opt);
    CHECK(r.iterations <= 3);
    for (std::size_t i = 0; i < 4; ++i) CHECK_THAT(r.x[i], WithinAbs(target[i], 1e-10));
  }
  SECTION("rosenbrock") {
    const Objective f = [](std::span<const double> x, std::span<double> g) {
      const double a = 1.0 - x[0];
      const double b = x[1] - x[0] * x[0];
      g[0] = -2.0 * a - 400.0 * x[0] * b;
      g[1] = 200.0 * b;
      return a * a + 100.0 * b * b;
    };
    LbfgsOptions opt;
    opt.max_iterations = 200;
    const LbfgsResult r = lbfgs_minimize(f, {-1.2, 1.0}, opt);
    CHECK(r.f <= 1e-8);
    CHECK_THAT(r.x[0], WithinAbs(1.0, 1e-3));
    CHECK_THAT(r.x[1], WithinAbs(1.0, 1e-3));
    for (const LbfgsStep& s : r.steps) {
      if (s.fallback) continue;
      CHECK(s.f_after <= s.f_before + opt.c1 * s.step * s.slope_before);
      CHECK(std::abs(s.slope_after) <= opt.c2 * std::abs(s.slope_before));
    }
  }
  SECTION("masked entries stay put") {
    const Objective f = [](std::span<const double> x, std::span<double> g) {
      g[0] = 2.0 * (x[0] - 3.0);
      g[1] = 2.0 * (x[1] + 1.0);
      return (x[0] - 3.0) * (x[0] - 3.0) + (x[1] + 1.0) * (x[1] + 1.0);
    };
    LbfgsOptions opt;
    opt.mask = {1, 0};
    const LbfgsResult r = lbfgs_minimize(f, {0.0, 0.0}, opt);
    CHECK_THAT(r.x[0], WithinAbs(3.0, 1e-8));
    CHECK(r.x[1] == 0.0);
  }
  SECTION("non-finite objective") {
    const Objective f = [](std::span<const double> x, std::span<double> g) {
      g[0] = 1.0;
      return x[0] < -0.5 ? std::nan("") : x[0];
    };
    REQUIRE_THROWS_AS(lbfgs_minimize(f, {std::nan("")}, LbfgsOptions{}), TrainingDiverged);
  }
}

TEST_CASE("kan training", "[optimize]") {
  const SidDataset ds = affine_dataset(400, 11);
  TrainConfig cfg;
  cfg.lamb = 0.0;
  const KanNetwork net = make_network({3, 1}, ds.input_labels, 5);
  const auto [trained, report] = lbfgs_train(net, ds, cfg);

  SECTION("affine targets are fitted") {
    CHECK(report.total_loss.size() <= 60);
    REQUIRE(!report.data_loss.empty());
    CHECK(report.data_loss.back() <= 1e-7);
  }
  SECTION("loss history does not increase without line-search failures") {
    if (report.line_search_failures == 0) {
      for (std::size_t i = 1; i < report.total_loss.size(); ++i) CHECK(report.total_loss[i] <= report.total_loss[i - 1]);
    }
  }
  SECTION("determinism") {
    const auto [again, report2] = lbfgs_train(net, ds, cfg);
    CHECK(get_parameters(again) == get_parameters(trained));
    CHECK(report2.total_loss == report.total_loss);
    CHECK(report2.data_loss == report.data_loss);
    CHECK(report2.penalty == report.penalty);
    CHECK(report2.final_gradient_norm == report.final_gradient_norm);
    CHECK(report2.evaluations == report.evaluations);
  }
  SECTION("with the sparsity penalty the loss still drops") {
    TrainConfig pen;
    const auto [p, rep] = lbfgs_train(net, ds, pen);
    CHECK(rep.total_loss.back() < rep.initial_loss);
  }
  SECTION("invalid config") {
    TrainConfig bad;
    bad.steps = 0;
    REQUIRE_THROWS_AS(lbfgs_train(net, ds, bad), InvalidArgument);
    bad = TrainConfig{};
    bad.wolfe_c1 = 0.95;
    REQUIRE_THROWS_AS(bad.validate(), InvalidArgument);
  }
}
