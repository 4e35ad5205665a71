#include "kansid/plant.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "kansid/error.hpp"

namespace kansid {

void BuckParams::validate() const {
  if (!(v_in > 0.0 && ind_l > 0.0 && cap_c > 0.0 && load_r > 0.0 && f_sw > 0.0)) {
    throw InvalidArgument("plant v_in, ind_l, cap_c, load_r and f_sw must be positive");
  }
  if (!(r_l >= 0.0 && r_c >= 0.0 && r_on >= 0.0)) throw InvalidArgument("plant parasitic resistances must be >= 0");
}

PlantDerivatives averaged_derivatives(const BuckParams& p, double i_l, double v_c, double duty) {
  if (!(duty >= 0.0 && duty <= 1.0)) {
    std::ostringstream msg;
    msg << "duty " << duty << " outside [0, 1]";
    throw InvalidArgument(msg.str());
  }
  const double a = p.alpha();
  PlantDerivatives d;
  d.v_out = a * (v_c + p.r_c * i_l);
  d.di_l = (duty * p.v_in - p.series_resistance() * i_l - d.v_out) / p.ind_l;
  d.dv_c = (a * i_l - (a / p.load_r) * v_c) / p.cap_c;
  return d;
}

double pi_step(PiController& ctrl, double v_ref, double v_out, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("controller time step must be positive");
  const double e = v_ref - v_out;
  const double raw = ctrl.kp * e + ctrl.integrator;
  if (raw >= ctrl.out_min && raw <= ctrl.out_max) ctrl.integrator += ctrl.ki * e * dt;
  return std::clamp(raw, ctrl.out_min, ctrl.out_max);
}

void ReferenceProfile::validate() const {
  if (steps.empty()) throw InvalidArgument("reference profile is empty");
  if (steps.front().start_s != 0.0) throw InvalidArgument("reference profile must start at t = 0");
  for (std::size_t i = 1; i < steps.size(); ++i) {
    if (!(steps[i].start_s > steps[i - 1].start_s)) {
      throw InvalidArgument("reference step times must be strictly increasing");
    }
  }
}

double ReferenceProfile::at(double t) const {
  double v = steps.front().v_ref;
  for (const auto& s : steps) {
    if (s.start_s <= t) v = s.v_ref;
  }
  return v;
}

ReferenceProfile default_training_profile() { return {{{0.0, 4.0}, {1.5, 6.0}, {3.0, 5.0}}}; }

ReferenceProfile default_validation_profile() { return {{{0.0, 5.0}, {0.5, 3.5}, {1.0, 5.5}, {1.5, 4.5}}}; }

bool StateSpaceModel::all_finite() const {
  return a.allFinite() && b.allFinite() && cm.allFinite() && dm.allFinite();
}

StateSpaceModel true_state_space(const BuckParams& p) {
  p.validate();
  const double a = p.alpha();
  StateSpaceModel m;
  m.a << -(p.series_resistance() + a * p.r_c) / p.ind_l, -a / p.ind_l,  //
      a / p.cap_c, -a / (p.load_r * p.cap_c);
  m.b << p.v_in / p.ind_l, 0.0,  //
      0.0, 0.0;
  return m;
}

namespace {

struct PlantState {
  double i_l;
  double v_c;
};

PlantState rk4_plant(const BuckParams& p, PlantState x, double duty, double h) {
  auto f = [&](const PlantState& s) {
    const PlantDerivatives d = averaged_derivatives(p, s.i_l, s.v_c, duty);
    return PlantState{d.di_l, d.dv_c};
  };
  const PlantState k1 = f(x);
  const PlantState k2 = f({x.i_l + 0.5 * h * k1.i_l, x.v_c + 0.5 * h * k1.v_c});
  const PlantState k3 = f({x.i_l + 0.5 * h * k2.i_l, x.v_c + 0.5 * h * k2.v_c});
  const PlantState k4 = f({x.i_l + h * k3.i_l, x.v_c + h * k3.v_c});
  return {x.i_l + h / 6.0 * (k1.i_l + 2.0 * k2.i_l + 2.0 * k3.i_l + k4.i_l),
          x.v_c + h / 6.0 * (k1.v_c + 2.0 * k2.v_c + 2.0 * k3.v_c + k4.v_c)};
}

constexpr int kSubstepsPerSample = 4;

}  // namespace

Trajectory simulate_plant(const BuckParams& p, PiController ctrl, const ReferenceProfile& profile,
                          const SimulationOptions& options) {
  p.validate();
  profile.validate();
  if (!(options.duration_s > 0.0)) throw InvalidArgument("simulation duration must be positive");
  const double ts = p.ts_seconds();
  const auto samples = static_cast<std::size_t>(std::llround(options.duration_s / ts)) + 1;
  const double h = ts / kSubstepsPerSample;

  Trajectory traj;
  traj.ts_seconds = ts;
  for (auto* col : {&traj.time, &traj.i_l, &traj.v_c, &traj.v_out, &traj.duty, &traj.v_in}) col->reserve(samples);

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> unit(0.0, 1.0);

  PlantState x{options.x0[0], options.x0[1]};
  double duty_now = std::clamp(ctrl.integrator, ctrl.out_min, ctrl.out_max);
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = static_cast<double>(k) * ts;
    if (!std::isfinite(x.i_l) || !std::isfinite(x.v_c)) {
      std::ostringstream msg;
      msg << "plant simulation diverged at t = " << t << " s";
      throw SimulationDiverged(msg.str(), t);
    }
    const double v_out = p.alpha() * (x.v_c + p.r_c * x.i_l);
    double i_rec = x.i_l;
    double v_rec = x.v_c;
    if (options.noise_sigma) {
      i_rec += (*options.noise_sigma)[0] * unit(rng);
      v_rec += (*options.noise_sigma)[1] * unit(rng);
    }
    traj.time.push_back(t);
    traj.i_l.push_back(i_rec);
    traj.v_c.push_back(v_rec);
    traj.v_out.push_back(options.noise_sigma ? p.alpha() * (v_rec + p.r_c * i_rec) : v_out);
    traj.duty.push_back(duty_now);
    traj.v_in.push_back(p.v_in);
    if (k + 1 == samples) break;

    const double duty_next = pi_step(ctrl, profile.at(t), v_out, ts);
    for (int s = 0; s < kSubstepsPerSample; ++s) {
      x = rk4_plant(p, x, s < kSubstepsPerSample / 2 ? duty_now : duty_next, h);
    }
    duty_now = duty_next;
  }
  return traj;
}

Eigen::Vector2d rk4_step(const StateSpaceModel& m, const Eigen::Vector2d& x, const Eigen::Vector2d& u, double h) {
  const Eigen::Vector2d bu = m.b * u;
  const Eigen::Vector2d k1 = m.a * x + bu;
  const Eigen::Vector2d k2 = m.a * (x + 0.5 * h * k1) + bu;
  const Eigen::Vector2d k3 = m.a * (x + 0.5 * h * k2) + bu;
  const Eigen::Vector2d k4 = m.a * (x + h * k3) + bu;
  return x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

std::vector<double> simulate_statespace(const StateSpaceModel& m, std::span<const double> duty, double ts_seconds,
                                        const Eigen::Vector2d& x0) {
  if (duty.empty()) throw InvalidArgument("state-space replay needs at least one duty sample");
  if (!(ts_seconds > 0.0)) throw InvalidArgument("state-space replay needs a positive sample period");
  const double h = ts_seconds / kSubstepsPerSample;
  std::vector<double> y;
  y.reserve(duty.size());
  Eigen::Vector2d x = x0;
  for (std::size_t k = 0; k < duty.size(); ++k) {
    if (!x.allFinite()) {
      const double t = static_cast<double>(k) * ts_seconds;
      std::ostringstream msg;
      msg << "state-space simulation diverged at t = " << t << " s";
      throw SimulationDiverged(msg.str(), t);
    }
    const Eigen::Vector2d u_now(duty[k], 1.0);
    y.push_back(m.cm.dot(x) + m.dm.dot(u_now));
    if (k + 1 == duty.size()) break;
    const Eigen::Vector2d u_next(duty[k + 1], 1.0);
    for (int s = 0; s < kSubstepsPerSample; ++s) x = rk4_step(m, x, s < kSubstepsPerSample / 2 ? u_now : u_next, h);
  }
  return y;
}

}  // namespace kansid
