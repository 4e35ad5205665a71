#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kansid/dataset.hpp"

namespace kansid {

/// Averaged buck converter with parasitics. Units: V, H, F, ohm, Hz.
struct BuckParams {
  double v_in = 10.0;
  double ind_l = 10.3e-6;
  double cap_c = 720e-6;
  double load_r = 3.0;
  double r_l = 0.05;
  double r_c = 0.02;
  double r_on = 0.03;
  double f_sw = 20e3;

  void validate() const;
  /// Sample period: half the switching period.
  [[nodiscard]] double ts_seconds() const noexcept { return 1.0 / (2.0 * f_sw); }
  /// Output divider factor load_r / (load_r + r_c).
  [[nodiscard]] double alpha() const noexcept { return load_r / (load_r + r_c); }
  [[nodiscard]] double series_resistance() const noexcept { return r_l + r_on; }
};

struct PlantDerivatives {
  double di_l = 0.0;  ///< A/s
  double dv_c = 0.0;  ///< V/s
  double v_out = 0.0;
};

[[nodiscard]] PlantDerivatives averaged_derivatives(const BuckParams& p, double i_l, double v_c, double duty);

/// PI voltage controller with output clamp and conditional-integration
/// anti-windup.
struct PiController {
  double kp = 0.0;
  double ki = 50.0;
  double integrator = 0.0;
  double out_min = 0.0;
  double out_max = 1.0;
};

/// duty = clamp(kp*e + integ); the integrator advances only when the
/// unclamped output is inside the limits.
double pi_step(PiController& ctrl, double v_ref, double v_out, double dt);

struct ReferenceStep {
  double start_s = 0.0;
  double v_ref = 0.0;
};

struct ReferenceProfile {
  std::vector<ReferenceStep> steps;

  void validate() const;
  [[nodiscard]] double at(double t) const;
};

[[nodiscard]] ReferenceProfile default_training_profile();
[[nodiscard]] ReferenceProfile default_validation_profile();

/// x' = A x + B u,  y = Cm x + Dm u  with states [i_L, v_C] and inputs [D, gamma].
struct StateSpaceModel {
  Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d b = Eigen::Matrix2d::Zero();
  Eigen::RowVector2d cm = Eigen::RowVector2d(0.0, 1.0);
  Eigen::RowVector2d dm = Eigen::RowVector2d::Zero();
  std::vector<std::string> state_labels{"i_L", "v_C"};
  std::vector<std::string> input_labels{"D", "gamma"};
  int gamma_index = 1;

  [[nodiscard]] bool all_finite() const;
};

[[nodiscard]] StateSpaceModel true_state_space(const BuckParams& p);

struct SimulationOptions {
  double duration_s = 5.0;
  std::array<double, 2> x0{0.0, 0.0};
  /// Per-state measurement noise (std dev) added to recorded i_L / v_C only.
  std::optional<std::array<double, 2>> noise_sigma;
  std::uint64_t seed = 0;
};

/// Closed-loop averaged simulation sampled every ts = 1/(2 f_sw). At each
/// sample the controller computes a new duty which takes effect half a sample
/// later; each sample interval is integrated with RK4 in 4 equal substeps (two
/// per duty segment). Row k records the duty in effect at t_k.
[[nodiscard]] Trajectory simulate_plant(const BuckParams& p, PiController ctrl, const ReferenceProfile& profile,
                                        const SimulationOptions& options);

/// Replays `duty` (one entry per sample, same timing convention as
/// simulate_plant) with gamma = 1 and returns y = Cm x + Dm u per sample.
[[nodiscard]] std::vector<double> simulate_statespace(const StateSpaceModel& m, std::span<const double> duty,
                                                      double ts_seconds, const Eigen::Vector2d& x0);

/// One RK4 step of x' = A x + B u of length h (exposed for tests/benchmarks).
[[nodiscard]] Eigen::Vector2d rk4_step(const StateSpaceModel& m, const Eigen::Vector2d& x, const Eigen::Vector2d& u,
                                       double h);

}  // namespace kansid
