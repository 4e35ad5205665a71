#include <catch_amalgamated.hpp>

#include <random>

#include "kansid/error.hpp"
#include "kansid/model_io.hpp"
#include "kansid/symbolic.hpp"

using namespace kansid;

TEST_CASE("model round-trip", "[model_io]") {
  KanNetwork net = make_network({3, 2, 1}, {"i_L", "v_C", "D"}, 1234);
  net.output_label = "v_C";
  net.ts_seconds = 25e-6;
  set_edge_grids(net, 0, 1, make_uniform_grid(4.1, 5.3, 7, 2));

  const KanNetwork back = load_model_text(save_model(net).dump());
  CHECK(back.shape == net.shape);
  CHECK(back.input_labels == net.input_labels);
  CHECK(back.output_label == net.output_label);
  CHECK(back.seed == net.seed);
  CHECK(back.ts_seconds == net.ts_seconds);
  CHECK(get_parameters(back) == get_parameters(net));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 6.0);
  for (int n = 0; n < 100; ++n) {
    const std::vector<double> g{u(rng), u(rng), u(rng)};
    CHECK(evaluate(back, g)[0] == evaluate(net, g)[0]);
  }
}

TEST_CASE("malformed documents", "[model_io]") {
  const std::string text = save_model(make_network({3, 1}, {"a", "b", "c"}, 1)).dump();
  REQUIRE_THROWS_AS(load_model_text(text.substr(0, text.size() / 2)), ParseError);

  Json doc = save_model(make_network({3, 1}, {"a", "b", "c"}, 1));
  doc["layers"][0]["edges"][1].erase("w_spline");
  try {
    (void)load_model(doc);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("w_spline") != std::string::npos);
  }

  Json no_shape = save_model(make_network({3, 1}, {"a", "b", "c"}, 1));
  no_shape.erase("shape");
  REQUIRE_THROWS_WITH(load_model(no_shape), Catch::Matchers::ContainsSubstring("shape"));
}

TEST_CASE("symbolic overrides survive reload", "[model_io]") {
  KanNetwork net = make_network({3, 2, 1}, {"x", "y", "z"}, 8);
  net.output_label = "s";
  double k = 0.1;
  for (auto& layer : net.layers) {
    for (auto& e : layer.edges) {
      e.symbolic = SymbolicFn{Primitive::kLinear, 1.0 + k, -k, 3.0 * k, k / 7.0};
      e.trainable = false;
      k += 0.37;
    }
  }
  net.layers[0].edge(0, 2).symbolic = SymbolicFn{Primitive::kZero, 1, 0, 0, 0};
  const KanNetwork back = load_model(save_model(net));
  CHECK(!back.layers[0].edge(0, 0).trainable);

  const SymbolicEquation a = to_equation(net);
  const SymbolicEquation b = to_equation(back);
  CHECK(a.state_label == b.state_label);
  CHECK(a.input_labels == b.input_labels);
  CHECK(a.slopes == b.slopes);
  CHECK(a.constant == b.constant);
  CHECK(a.to_string() == b.to_string());
}

TEST_CASE("equation documents", "[model_io]") {
  SymbolicEquation eq;
  eq.state_label = "v_C";
  eq.input_labels = {"i_L", "v_C", "D"};
  eq.slopes = {1373.6412345678901, -457.88, 0.0};
  eq.constant = 1.0 / 3.0;
  eq.scale_applied = true;
  eq.edge_r2 = {{"0,0,0", 0.9999999}, {"0,0,1", 1.0}};
  const SymbolicEquation back = load_equation(Json::parse(save_equation(eq).dump()));
  CHECK(back.state_label == eq.state_label);
  CHECK(back.input_labels == eq.input_labels);
  CHECK(back.slopes == eq.slopes);
  CHECK(back.constant == eq.constant);
  CHECK(back.scale_applied);
  CHECK(back.edge_r2 == eq.edge_r2);
}
