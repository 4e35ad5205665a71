#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "kansid/error.hpp"
#include "kansid/kan.hpp"
#include "oracles.hpp"

using namespace kansid;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SymbolicFn linear(double slope, double intercept) { return {Primitive::kLinear, 1.0, 0.0, slope, intercept}; }

KanNetwork affine_net(std::vector<double> slopes, std::vector<double> intercepts) {
  KanNetwork net = make_network({slopes.size(), 1}, {}, 1);
  for (std::size_t i = 0; i < slopes.size(); ++i) {
    net.layers[0].edge(0, i).symbolic = linear(slopes[i], intercepts[i]);
  }
  return net;
}

std::vector<double> random_inputs(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> x(n);
  for (double& v : x) v = u(rng);
  return x;
}

}  // namespace

TEST_CASE("edge evaluation", "[kan]") {
  SplineEdge e;
  e.grid = make_uniform_grid(-1.0, 1.0, 5, 3);
  e.coeffs.assign(e.grid.basis_count(), 0.0);

  e.symbolic = linear(2.0, 1.0);
  CHECK(edge_eval(e, 3.0) == 7.0);

  e.symbolic.reset();
  e.w_base = 0.0;
  e.w_spline = 1.0;
  for (double x : {-3.0, -0.5, 0.0, 0.7, 4.0}) CHECK(edge_eval(e, x) == 0.0);

  e.w_base = 1.0;
  e.w_spline = 0.0;
  CHECK(edge_eval(e, 0.0) == 0.0);
  CHECK_THAT(edge_eval(e, 1.5), WithinRel(oracle::silu(1.5), 1e-15));

  // the zero primitive still carries its offset d
  e.symbolic = SymbolicFn{Primitive::kZero, 1.0, 0.0, 5.0, 3.0};
  CHECK(edge_eval(e, 2.0) == 3.0);
}

TEST_CASE("forward pass", "[kan]") {
  SECTION("identity edge") {
    KanNetwork net = make_network({1, 1}, {"x"}, 0);
    net.layers[0].edge(0, 0).symbolic = linear(1.0, 0.0);
    for (double x : {-1.0, 0.0, 2.0}) CHECK(evaluate(net, std::vector<double>{x})[0] == x);
  }
  SECTION("affine sum of edges") {
    const KanNetwork net = affine_net({2.0, -1.0, 0.0}, {0.5, 0.25, 0.25});
    std::mt19937_64 rng(2);
    for (int n = 0; n < 20; ++n) {
      const auto g = random_inputs(rng, 3, -5.0, 5.0);
      CHECK_THAT(evaluate(net, g)[0], WithinAbs(2 * g[0] - g[1] + 1.0, 1e-12));
    }
  }
  SECTION("seeded network against a direct re-evaluation") {
    const KanNetwork net = make_network({3, 1}, {"i_L", "v_C", "D"}, 42);
    const std::vector<double> g{0.1, 0.2, 0.3};
    CHECK_THAT(evaluate(net, g)[0], WithinAbs(oracle::network(net, g)[0], 1e-13));

    const KanNetwork deep = make_network({3, 4, 2, 1}, {}, 42);
    std::mt19937_64 rng(8);
    for (int n = 0; n < 50; ++n) {
      const auto x = random_inputs(rng, 3);
      CHECK_THAT(evaluate(deep, x)[0], WithinAbs(oracle::network(deep, x)[0], 1e-12));
    }
  }
  SECTION("cache contents") {
    const KanNetwork net = make_network({3, 2, 1}, {}, 4);
    const std::vector<double> g{0.3, -0.2, 0.9};
    const ForwardResult r = forward(net, g);
    REQUIRE(r.cache.nodes.size() == 3);
    CHECK(r.cache.nodes[0] == g);
    CHECK(r.cache.nodes[2] == r.output);
    for (std::size_t o = 0; o < 2; ++o) {
      double sum = 0.0;
      for (std::size_t i = 0; i < 3; ++i) sum += r.cache.activations[0][o * 3 + i];
      CHECK_THAT(r.cache.nodes[1][o], WithinAbs(sum, 1e-15));
    }
  }
  SECTION("dimension mismatch") {
    const KanNetwork net = make_network({3, 1}, {}, 0);
    REQUIRE_THROWS_AS(forward(net, std::vector<double>{1.0, 2.0}), InvalidArgument);
  }
  SECTION("same seed, same parameters") {
    CHECK(get_parameters(make_network({3, 2, 1}, {}, 77)) == get_parameters(make_network({3, 2, 1}, {}, 77)));
    CHECK(get_parameters(make_network({3, 2, 1}, {}, 77)) != get_parameters(make_network({3, 2, 1}, {}, 78)));
  }
}

TEST_CASE("backward pass", "[kan]") {
  SECTION("zero upstream gives zero gradients") {
    const KanNetwork net = make_network({3, 2, 1}, {}, 5);
    const auto r = forward(net, std::vector<double>{0.1, 0.5, -0.4});
    const auto b = backward(net, r.cache, std::vector<double>{0.0});
    for (double v : b.parameter_grad) CHECK(v == 0.0);
    for (double v : b.input_grad) CHECK(v == 0.0);
  }
  SECTION("w_spline gradient is the spline sum") {
    KanNetwork net = make_network({1, 1}, {}, 6);
    const double x = 0.37;
    const auto r = forward(net, std::vector<double>{x});
    const auto b = backward(net, r.cache, std::vector<double>{1.0});
    const SplineEdge& e = net.layers[0].edge(0, 0);
    double sum = 0.0;
    for (std::size_t i = 0; i < e.coeffs.size(); ++i) sum += e.coeffs[i] * oracle::cox_de_boor(e.grid.knots, i, 3, x);
    // layout: coeffs..., w_base, w_spline
    CHECK_THAT(b.parameter_grad.back(), WithinAbs(sum, 1e-14));
    for (std::size_t i = 0; i < e.coeffs.size(); ++i) {
      CHECK_THAT(b.parameter_grad[i], WithinAbs(e.w_spline * oracle::cox_de_boor(e.grid.knots, i, 3, x), 1e-14));
    }
  }
  SECTION("gradients match central differences") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      for (const auto& shape : {std::vector<std::size_t>{3, 1}, std::vector<std::size_t>{3, 2, 1}}) {
        KanNetwork net = make_network(shape, {}, seed);
        std::mt19937_64 rng(seed + 100);
        const auto g = random_inputs(rng, 3, -1.2, 1.2);
        const auto r = forward(net, g);
        const auto b = backward(net, r.cache, std::vector<double>{1.0});
        REQUIRE(b.parameter_grad.size() == net.parameter_count());
        for (std::size_t p = 0; p < b.parameter_grad.size(); ++p) {
          INFO("seed " << seed << ", parameter " << p);
          CHECK(oracle::rel_err(b.parameter_grad[p], oracle::parameter_fd(net, g, p)) <= 1e-5);
        }
        auto fx = [&](const std::vector<double>& x) { return evaluate(net, x)[0]; };
        for (std::size_t i = 0; i < 3; ++i) {
          CHECK(oracle::rel_err(b.input_grad[i], oracle::central_diff(fx, g, i, 1e-6)) <= 1e-5);
        }
      }
    }
  }
  SECTION("symbolic edges contribute c and d gradients") {
    KanNetwork net = make_network({2, 1}, {}, 1);
    net.layers[0].edge(0, 0).symbolic = SymbolicFn{Primitive::kSine, 1.3, 0.2, 0.7, 0.1};
    const std::vector<double> g{0.4, -0.3};
    const auto r = forward(net, g);
    const auto b = backward(net, r.cache, std::vector<double>{1.0});
    const auto theta = get_parameters(net);
    auto f = [&](const std::vector<double>& th) {
      KanNetwork copy = net;
      set_parameters(copy, th);
      return evaluate(copy, g)[0];
    };
    for (std::size_t p = 0; p < theta.size(); ++p) {
      CHECK(oracle::rel_err(b.parameter_grad[p], oracle::central_diff(f, theta, p, 1e-6)) <= 1e-5);
    }
  }
  SECTION("stale cache") {
    const KanNetwork a = make_network({3, 1}, {}, 1);
    const KanNetwork b = make_network({3, 2, 1}, {}, 1);
    const auto r = forward(a, std::vector<double>{0.0, 0.0, 0.0});
    REQUIRE_THROWS_AS(backward(b, r.cache, std::vector<double>{1.0}), InvalidState);
  }
}

TEST_CASE("parameters and mask", "[kan]") {
  KanNetwork net = make_network({3, 2, 1}, {}, 9);
  auto theta = get_parameters(net);
  REQUIRE(theta.size() == net.parameter_count());
  for (double& t : theta) t *= 2.0;
  set_parameters(net, theta);
  CHECK(get_parameters(net) == theta);
  REQUIRE_THROWS_AS(set_parameters(net, std::vector<double>(theta.size() + 1)), InvalidArgument);

  net.layers[0].edge(1, 2).symbolic = linear(1.0, 0.0);
  net.layers[0].edge(1, 2).trainable = false;
  const auto mask = trainable_mask(net);
  REQUIRE(mask.size() == net.parameter_count());
  CHECK(std::count(mask.begin(), mask.end(), 0) == 2);
}

TEST_CASE("activation statistics", "[kan]") {
  SECTION("zero network") {
    KanNetwork net = make_network({3, 1}, {}, 0);
    for (auto& e : net.layers[0].edges) e.symbolic = SymbolicFn{Primitive::kZero, 1, 0, 0, 0};
    const std::vector<double> batch{1, 2, 3, 4, 5, 6};
    const auto s = activation_stats(net, batch);
    for (double m : s.edge_mean[0]) CHECK(m == 0.0);
    CHECK(regularization(s, 0.01, 10.0) == 0.0);
  }
  SECTION("single linear edge") {
    KanNetwork net = make_network({1, 1}, {}, 0);
    net.layers[0].edge(0, 0).symbolic = linear(1.0, 0.0);
    const auto s = activation_stats(net, std::vector<double>{-1.0, 1.0});
    CHECK(s.edge_mean[0][0] == 1.0);
  }
  SECTION("brute-force recomputation") {
    const KanNetwork net = make_network({3, 2, 1}, {}, 12);
    std::mt19937_64 rng(4);
    const auto batch = random_inputs(rng, 3 * 40);
    const auto s = activation_stats(net, batch);
    std::vector<std::vector<double>> expect{std::vector<double>(6, 0.0), std::vector<double>(2, 0.0)};
    for (std::size_t r = 0; r < 40; ++r) {
      std::vector<double> x(batch.begin() + 3 * r, batch.begin() + 3 * r + 3);
      for (std::size_t l = 0; l < 2; ++l) {
        const auto& layer = net.layers[l];
        std::vector<double> next(layer.out_dim, 0.0);
        for (std::size_t o = 0; o < layer.out_dim; ++o) {
          for (std::size_t i = 0; i < layer.in_dim; ++i) {
            const double a = oracle::edge(layer.edge(o, i), x[i]);
            expect[l][o * layer.in_dim + i] += std::abs(a) / 40.0;
            next[o] += a;
          }
        }
        x = next;
      }
    }
    for (std::size_t l = 0; l < 2; ++l) {
      for (std::size_t e = 0; e < expect[l].size(); ++e) CHECK_THAT(s.edge_mean[l][e], WithinAbs(expect[l][e], 1e-12));
    }
    // hidden node 0: incoming edges (0,0..2), outgoing edge (layer 1, 0, 0)
    CHECK(s.node_in_max[1][0] == std::max({s.edge_mean[0][0], s.edge_mean[0][1], s.edge_mean[0][2]}));
    CHECK(s.node_out_max[1][1] == s.edge_mean[1][1]);
  }
  SECTION("empty batch") {
    const KanNetwork net = make_network({3, 1}, {}, 0);
    REQUIRE_THROWS_AS(activation_stats(net, std::vector<double>{}), InvalidArgument);
  }
}

TEST_CASE("regularization", "[kan]") {
  ActivationStats s;
  s.edge_mean = {{1.0, 1.0}};
  CHECK_THAT(regularization(s, 1.0, 0.0), WithinAbs(2.0, 1e-15));
  CHECK_THAT(regularization(s, 1.0, 1.0), WithinAbs(2.0 + std::log(2.0), 1e-12));
  s.edge_mean = {{0.0, 0.0}};
  CHECK(regularization(s, 1.0, 1.0) == 0.0);

  SECTION("gradient matches central differences") {
    ActivationStats t;
    t.edge_mean = {{0.3, 0.0, 1.7, 0.05}, {0.9, 0.2}};
    const Penalty p = regularization_with_grad(t, 0.01, 10.0);
    CHECK_THAT(p.value, WithinAbs(regularization(t, 0.01, 10.0), 1e-15));
    for (std::size_t l = 0; l < t.edge_mean.size(); ++l) {
      for (std::size_t e = 0; e < t.edge_mean[l].size(); ++e) {
        if (t.edge_mean[l][e] == 0.0) continue;  // one-sided at the boundary
        auto f = [&](const std::vector<double>& v) {
          ActivationStats u = t;
          u.edge_mean[l] = v;
          return regularization(u, 0.01, 10.0);
        };
        CHECK(oracle::rel_err(p.d_edge_mean[l][e], oracle::central_diff(f, t.edge_mean[l], e, 1e-7)) <= 1e-6);
      }
    }
  }
}

TEST_CASE("pruning", "[kan]") {
  auto build = [] {
    KanNetwork net = make_network({3, 2, 1}, {}, 3);
    for (std::size_t i = 0; i < 3; ++i) {
      net.layers[0].edge(0, i).symbolic = linear(1.0, 0.0);
      net.layers[0].edge(1, i).symbolic = linear(0.01, 0.0);
    }
    net.layers[1].edge(0, 0).symbolic = linear(1.0, 0.2);
    net.layers[1].edge(0, 1).symbolic = linear(1.0, 0.0);
    return net;
  };
  std::mt19937_64 rng(1);
  const auto batch = random_inputs(rng, 3 * 100);

  SECTION("threshold 0 keeps everything") {
    const KanNetwork net = build();
    const KanNetwork p = prune(net, activation_stats(net, batch), 0.0);
    CHECK(p.shape == net.shape);
    CHECK(get_parameters(p) == get_parameters(net));
  }
  SECTION("weak hidden node removed") {
    const KanNetwork net = build();
    const auto stats = activation_stats(net, batch);
    const double strong = std::min(stats.node_in_max[1][0], stats.node_out_max[1][0]);
    const double weak = std::max(stats.node_in_max[1][1], stats.node_out_max[1][1]);
    REQUIRE(weak < strong);
    const KanNetwork p = prune(net, stats, 0.5 * (weak + strong));
    CHECK(p.shape == std::vector<std::size_t>{3, 1, 1});

    KanNetwork silenced = net;
    silenced.layers[1].edge(0, 1).symbolic = SymbolicFn{Primitive::kZero, 1, 0, 0, 0};
    for (std::size_t r = 0; r < 100; ++r) {
      const std::span<const double> g(batch.data() + 3 * r, 3);
      CHECK(evaluate(p, g)[0] == evaluate(silenced, g)[0]);
    }
  }
  SECTION("node with zero incoming edges") {
    KanNetwork net = build();
    for (std::size_t i = 0; i < 3; ++i) net.layers[0].edge(1, i).symbolic = SymbolicFn{Primitive::kZero, 1, 0, 0, 0};
    const KanNetwork p = prune(net, activation_stats(net, batch), 1e-12);
    CHECK(p.shape == std::vector<std::size_t>{3, 1, 1});
  }
}

TEST_CASE("edge ids", "[kan]") { CHECK(edge_id(0, 1, 2) == "0,1,2"); }
