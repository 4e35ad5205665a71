#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "kansid/dataset.hpp"
#include "kansid/error.hpp"
#include "kansid/plant.hpp"

using namespace kansid;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Trajectory ramp_trajectory(std::size_t rows) {
  Trajectory t;
  t.ts_seconds = 25e-6;
  for (std::size_t k = 0; k < rows; ++k) {
    const double kk = static_cast<double>(k);
    t.time.push_back(kk * t.ts_seconds);
    t.i_l.push_back(0.5 * kk);
    t.v_c.push_back(4.0 + 0.01 * kk * kk);
    t.v_out.push_back(4.0 + 0.01 * kk * kk);
    t.duty.push_back(0.4);
    t.v_in.push_back(10.0);
  }
  return t;
}

}  // namespace

TEST_CASE("finite differences", "[dataset]") {
  SECTION("constant series") {
    const std::vector<double> c(7, 3.5);
    for (DiffMode m : {DiffMode::kLiteral, DiffMode::kConsistent}) {
      for (double v : finite_diff(c, m)) CHECK(v == 0.0);
    }
  }
  SECTION("ramp") {
    const std::vector<double> x{0, 1, 2, 3};
    CHECK(finite_diff(x, DiffMode::kLiteral) == std::vector<double>{1, 2, 2, 1});
    CHECK(finite_diff(x, DiffMode::kConsistent) == std::vector<double>{1, 1, 1, 1});
  }
  SECTION("sampled sine against the analytic derivative") {
    const double ts = 25e-6;
    const double w = 2.0 * std::numbers::pi * 50.0;
    std::vector<double> x(2001);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = std::sin(w * static_cast<double>(k) * ts);
    const auto d = finite_diff(x, DiffMode::kConsistent);
    for (std::size_t k = 1; k + 1 < x.size(); ++k) {
      const double expect = ts * w * std::cos(w * static_cast<double>(k) * ts);
      if (std::abs(expect) < 1e-3 * ts * w) continue;  // skip zero crossings of the derivative
      CHECK(std::abs(d[k] - expect) <= 1e-4 * std::abs(expect));
    }
  }
  SECTION("modes agree at the ends and differ by two inside") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> x(50);
    for (double& v : x) v = n(rng);
    const auto lit = finite_diff(x, DiffMode::kLiteral);
    const auto con = finite_diff(x, DiffMode::kConsistent);
    CHECK(lit.front() == con.front());
    CHECK(lit.back() == con.back());
    for (std::size_t k = 1; k + 1 < x.size(); ++k) CHECK(lit[k] == 2.0 * con[k]);
  }
  SECTION("linearity") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x(40), y(40), z(40);
    for (std::size_t i = 0; i < 40; ++i) {
      x[i] = u(rng);
      y[i] = u(rng);
      z[i] = 1.5 * x[i] - 0.25 * y[i];
    }
    for (DiffMode m : {DiffMode::kLiteral, DiffMode::kConsistent}) {
      const auto dx = finite_diff(x, m);
      const auto dy = finite_diff(y, m);
      const auto dz = finite_diff(z, m);
      for (std::size_t i = 0; i < 40; ++i) CHECK_THAT(dz[i], WithinAbs(1.5 * dx[i] - 0.25 * dy[i], 1e-14));
    }
  }
  SECTION("too short") { REQUIRE_THROWS_AS(finite_diff(std::vector<double>{1.0}, DiffMode::kLiteral), InvalidArgument); }
  SECTION("mode names") {
    CHECK(diff_mode_from_name(diff_mode_name(DiffMode::kLiteral)) == DiffMode::kLiteral);
    REQUIRE_THROWS_AS(diff_mode_from_name("central"), InvalidArgument);
  }
}

TEST_CASE("build_dataset", "[dataset]") {
  SECTION("stride arithmetic and row order") {
    const Trajectory t = ramp_trajectory(11);
    const SidDataset ds = build_dataset(t, "v_C", DiffMode::kConsistent, 2);
    REQUIRE(ds.rows() == 6);
    REQUIRE(ds.cols() == 3);
    CHECK(ds.input_labels == std::vector<std::string>{"i_L", "v_C", "D"});
    const auto full = finite_diff(t.v_c, DiffMode::kConsistent);
    for (std::size_t r = 0; r < ds.rows(); ++r) {
      CHECK(ds.row(r)[0] == t.i_l[2 * r]);
      CHECK(ds.row(r)[1] == t.v_c[2 * r]);
      CHECK(ds.row(r)[2] == t.duty[2 * r]);
      CHECK(ds.targets[r] == full[2 * r]);
    }
    CHECK(build_dataset(t, "i_L", DiffMode::kConsistent, 3).rows() == 4);
  }
  SECTION("equilibrium gives zero targets") {
    BuckParams p;
    const StateSpaceModel m = true_state_space(p);
    const Eigen::Vector2d x = -m.a.inverse() * (m.b * Eigen::Vector2d(0.45, 1.0));
    Trajectory t = ramp_trajectory(20);
    std::fill(t.i_l.begin(), t.i_l.end(), x(0));
    std::fill(t.v_c.begin(), t.v_c.end(), x(1));
    for (const char* s : {"i_L", "v_C"}) {
      for (double v : build_dataset(t, s, DiffMode::kConsistent, 1).targets) CHECK(v == 0.0);
    }
  }
  SECTION("errors") {
    const Trajectory t = ramp_trajectory(11);
    REQUIRE_THROWS_AS(build_dataset(t, "v_out", DiffMode::kConsistent, 1), InvalidArgument);
    REQUIRE_THROWS_AS(build_dataset(t, "i_L", DiffMode::kConsistent, 0), InvalidArgument);
    Trajectory varying = t;
    varying.v_in[4] = 11.0;
    REQUIRE_THROWS_AS(build_dataset(varying, "i_L", DiffMode::kConsistent, 1), InvalidArgument);
    CHECK_NOTHROW(build_dataset(varying, "i_L", DiffMode::kConsistent, 1, false));
  }
}

TEST_CASE("input ranges", "[dataset]") {
  SidDataset ds;
  ds.input_labels = {"i_L", "v_C", "D"};
  ds.inputs = {1.0, 2.0, 0.5};
  ds.targets = {0.0};
  auto r = input_ranges(ds);
  CHECK(r == std::vector<std::pair<double, double>>{{1, 1}, {2, 2}, {0.5, 0.5}});

  ds.inputs.insert(ds.inputs.end(), {-1.0, 3.0, 0.5});
  ds.targets.push_back(0.0);
  r = input_ranges(ds);
  CHECK(r == std::vector<std::pair<double, double>>{{-1, 1}, {2, 3}, {0.5, 0.5}});

  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 3.0);
  SidDataset big;
  big.input_labels = {"a", "b", "c"};
  for (int i = 0; i < 10000; ++i) {
    for (int c = 0; c < 3; ++c) big.inputs.push_back(n(rng));
    big.targets.push_back(0.0);
  }
  r = input_ranges(big);
  for (std::size_t c = 0; c < 3; ++c) {
    double lo = big.inputs[c];
    double hi = big.inputs[c];
    for (std::size_t i = 0; i < big.rows(); ++i) {
      lo = std::min(lo, big.inputs[i * 3 + c]);
      hi = std::max(hi, big.inputs[i * 3 + c]);
    }
    CHECK(r[c] == std::make_pair(lo, hi));
  }

  SidDataset empty;
  empty.input_labels = {"a"};
  REQUIRE_THROWS_AS(input_ranges(empty), InvalidArgument);
}

TEST_CASE("trajectory csv", "[dataset]") {
  Trajectory t = ramp_trajectory(25);
  t.i_l[3] = 1.0 / 3.0;
  t.v_c[7] = -2.718281828459045e-7;
  std::stringstream ss;
  write_trajectory_csv(ss, t);
  CHECK(ss.str().rfind("t,i_L,v_C,v_out,duty,v_in\n", 0) == 0);
  const Trajectory back = read_trajectory_csv(ss);
  CHECK(back.time == t.time);
  CHECK(back.i_l == t.i_l);
  CHECK(back.v_c == t.v_c);
  CHECK(back.duty == t.duty);
  CHECK(back.v_in == t.v_in);
  CHECK_THAT(back.ts_seconds, WithinRel(t.ts_seconds, 1e-9));

  SECTION("columns in another order") {
    std::stringstream in("duty,t,v_C,i_L,v_in,v_out\n0.5,0,1,2,10,1\n0.5,0.001,1,2,10,1\n");
    const Trajectory r = read_trajectory_csv(in);
    CHECK(r.rows() == 2);
    CHECK(r.i_l[1] == 2.0);
  }
  SECTION("missing column is named") {
    std::stringstream in("t,i_L,v_out,duty,v_in\n0,1,1,0.5,10\n");
    REQUIRE_THROWS_WITH(read_trajectory_csv(in), Catch::Matchers::ContainsSubstring("v_C"));
  }
  SECTION("duty out of range") {
    std::stringstream in("t,i_L,v_C,v_out,duty,v_in\n0,1,1,1,0.5,10\n0.001,1,1,1,1.5,10\n");
    REQUIRE_THROWS(read_trajectory_csv(in));
  }
}

TEST_CASE("targets follow the linear plant", "[dataset]") {
  const BuckParams p;
  const ReferenceProfile prof = default_training_profile();
  SimulationOptions opt;
  opt.duration_s = 1.55;
  const Trajectory traj = simulate_plant(p, PiController{}, prof, opt);
  const StateSpaceModel m = true_state_space(p);
  const double ts = p.ts_seconds();
  for (int s = 0; s < 2; ++s) {
    const SidDataset ds = build_dataset(traj, s == 0 ? "i_L" : "v_C", DiffMode::kConsistent, 1);
    double worst = 0.0;
    for (std::size_t r = 1; r + 1 < ds.rows(); ++r) {
      const double t = traj.time[r];
      if (t < 3e-3 || (t >= 1.5 && t < 1.503)) continue;  // LC transients after start-up and the step
      const auto g = ds.row(r);
      const double terms[3] = {m.a(s, 0) * g[0], m.a(s, 1) * g[1], m.b(s, 0) * g[2]};
      const double f = ts * (terms[0] + terms[1] + terms[2]);
      const double size = ts * (std::abs(terms[0]) + std::abs(terms[1]) + std::abs(terms[2]));
      worst = std::max(worst, std::abs(ds.targets[r] - f) / size);
    }
    CHECK(worst <= 1e-3);
  }
}
