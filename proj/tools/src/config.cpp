#include "config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "kansid/error.hpp"

namespace kansid::cli {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw InvalidArgument("bad value '" + std::string(value) + "' for key '" + std::string(key) + "' (expected " +
                        std::string(expected) + ")");
}

double to_double(std::string_view key, std::string_view v) {
  v = trim(v);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) bad_value(key, v, "a number");
  return out;
}

long long to_integer(std::string_view key, std::string_view v) {
  v = trim(v);
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) bad_value(key, v, "an integer");
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  v = trim(v);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "true|false");
}

ConfigKey number(std::string key, std::string help, double PipelineConfig::*field) {
  return {key, std::move(help), [field](const CliConfig& c) { return fmt(c.pipeline.*field); },
          [field, key](CliConfig& c, std::string_view v) { c.pipeline.*field = to_double(key, v); }};
}

template <typename Owner>
ConfigKey nested(std::string key, std::string help, Owner PipelineConfig::*owner, double Owner::*field) {
  return {key, std::move(help), [owner, field](const CliConfig& c) { return fmt(c.pipeline.*owner.*field); },
          [owner, field, key](CliConfig& c, std::string_view v) { c.pipeline.*owner.*field = to_double(key, v); }};
}

template <typename Owner>
ConfigKey nested_int(std::string key, std::string help, Owner PipelineConfig::*owner, int Owner::*field) {
  return {key, std::move(help), [owner, field](const CliConfig& c) { return std::to_string(c.pipeline.*owner.*field); },
          [owner, field, key](CliConfig& c, std::string_view v) {
            c.pipeline.*owner.*field = static_cast<int>(to_integer(key, v));
          }};
}

ConfigKey toggle(std::string key, std::string help, bool CliConfig::*field) {
  return {key, std::move(help), [field](const CliConfig& c) { return std::string(c.*field ? "true" : "false"); },
          [field, key](CliConfig& c, std::string_view v) { c.*field = to_bool(key, v); }};
}

std::vector<ConfigKey> build_keys() {
  using P = PipelineConfig;
  std::vector<ConfigKey> k;
  k.push_back(nested("plant.v_in", "input voltage [V]", &P::plant, &BuckParams::v_in));
  k.push_back(nested("plant.ind_l", "inductance [H]", &P::plant, &BuckParams::ind_l));
  k.push_back(nested("plant.cap_c", "capacitance [F]", &P::plant, &BuckParams::cap_c));
  k.push_back(nested("plant.load_r", "load resistance [ohm]", &P::plant, &BuckParams::load_r));
  k.push_back(nested("plant.r_l", "inductor ESR [ohm]", &P::plant, &BuckParams::r_l));
  k.push_back(nested("plant.r_c", "capacitor ESR [ohm]", &P::plant, &BuckParams::r_c));
  k.push_back(nested("plant.r_on", "switch on-resistance [ohm]", &P::plant, &BuckParams::r_on));
  k.push_back(nested("plant.f_sw", "switching frequency [Hz]; Ts = 1/f_sw", &P::plant, &BuckParams::f_sw));

  k.push_back(nested("controller.kp", "proportional gain [1/V]", &P::controller, &PiController::kp));
  k.push_back(nested("controller.ki", "integral gain [1/(V s)]", &P::controller, &PiController::ki));
  k.push_back(nested("controller.integrator", "initial integrator state", &P::controller, &PiController::integrator));
  k.push_back(nested("controller.out_min", "lower duty limit", &P::controller, &PiController::out_min));
  k.push_back(nested("controller.out_max", "upper duty limit", &P::controller, &PiController::out_max));

  k.push_back(number("simulation.duration_s", "training trajectory length [s]", &P::duration_s));
  k.push_back({"simulation.reference", "training reference steps as start_s:volts,...",
               [](const CliConfig& c) { return format_profile(c.pipeline.training_profile); },
               [](CliConfig& c, std::string_view v) { c.pipeline.training_profile = parse_profile(v); }});
  k.push_back({"simulation.noise_sigma", "per-state measurement noise 'i_L,v_C' or 'off'",
               [](const CliConfig& c) {
                 if (!c.pipeline.noise_sigma) return std::string("off");
                 return fmt((*c.pipeline.noise_sigma)[0]) + "," + fmt((*c.pipeline.noise_sigma)[1]);
               },
               [](CliConfig& c, std::string_view v) {
                 if (trim(v) == "off") {
                   c.pipeline.noise_sigma.reset();
                   return;
                 }
                 const auto parts = split(v, ',');
                 if (parts.size() != 2) bad_value("simulation.noise_sigma", v, "'a,b' or 'off'");
                 c.pipeline.noise_sigma = std::array<double, 2>{to_double("simulation.noise_sigma", parts[0]),
                                                                to_double("simulation.noise_sigma", parts[1])};
               }});
  k.push_back(number("validation.duration_s", "held-out trajectory length [s]", &P::validation_duration_s));
  k.push_back({"validation.reference", "held-out reference steps as start_s:volts,...",
               [](const CliConfig& c) { return format_profile(c.pipeline.validation_profile); },
               [](CliConfig& c, std::string_view v) { c.pipeline.validation_profile = parse_profile(v); }});
  k.push_back({"validation.source", "fresh | training",
               [](const CliConfig& c) { return std::string(verification_source_name(c.pipeline.verification)); },
               [](CliConfig& c, std::string_view v) { c.pipeline.verification = verification_source_from_name(trim(v)); }});

  k.push_back({"data.diff_mode", "consistent | literal",
               [](const CliConfig& c) { return std::string(diff_mode_name(c.pipeline.diff_mode)); },
               [](CliConfig& c, std::string_view v) { c.pipeline.diff_mode = diff_mode_from_name(trim(v)); }});
  k.push_back({"data.allow_literal", "accept literal differences for identification",
               [](const CliConfig& c) { return std::string(c.pipeline.allow_literal ? "true" : "false"); },
               [](CliConfig& c, std::string_view v) { c.pipeline.allow_literal = to_bool("data.allow_literal", v); }});
  k.push_back({"data.stride", "keep every n-th sample",
               [](const CliConfig& c) { return std::to_string(c.pipeline.stride); },
               [](CliConfig& c, std::string_view v) {
                 const long long n = to_integer("data.stride", v);
                 if (n < 1) bad_value("data.stride", v, "an integer >= 1");
                 c.pipeline.stride = static_cast<std::size_t>(n);
               }});

  k.push_back(nested_int("train.steps", "LBFGS iterations", &P::train, &TrainConfig::steps));
  k.push_back(nested("train.lamb", "sparsity penalty weight", &P::train, &TrainConfig::lamb));
  k.push_back(nested("train.lamb_entropy", "entropy weight inside the penalty", &P::train, &TrainConfig::lamb_entropy));
  k.push_back(nested_int("train.lbfgs_memory", "LBFGS history size", &P::train, &TrainConfig::lbfgs_memory));
  k.push_back(nested("train.wolfe_c1", "sufficient-decrease constant", &P::train, &TrainConfig::wolfe_c1));
  k.push_back(nested("train.wolfe_c2", "curvature constant", &P::train, &TrainConfig::wolfe_c2));
  k.push_back(nested_int("train.max_line_search_evals", "evaluations per line search", &P::train,
                         &TrainConfig::max_line_search_evals));
  k.push_back(nested("train.gradient_tolerance", "stop when |grad| falls below", &P::train,
                     &TrainConfig::gradient_tolerance));
  k.push_back({"train.loss_reduction", "mean | sum",
               [](const CliConfig& c) { return std::string(reduction_name(c.pipeline.train.loss_reduction)); },
               [](CliConfig& c, std::string_view v) { c.pipeline.train.loss_reduction = reduction_from_name(trim(v)); }});

  k.push_back({"model.grid_intervals", "spline intervals per edge",
               [](const CliConfig& c) { return std::to_string(c.pipeline.grid_intervals); },
               [](CliConfig& c, std::string_view v) {
                 c.pipeline.grid_intervals = static_cast<int>(to_integer("model.grid_intervals", v));
               }});
  k.push_back({"model.grid_order", "spline order",
               [](const CliConfig& c) { return std::to_string(c.pipeline.grid_order); },
               [](CliConfig& c, std::string_view v) {
                 c.pipeline.grid_order = static_cast<int>(to_integer("model.grid_order", v));
               }});
  k.push_back(number("model.grid_margin", "relative padding of the input range", &P::grid_margin));
  k.push_back({"model.hidden", "hidden layer widths, comma separated (empty for [3,1])",
               [](const CliConfig& c) {
                 std::string s;
                 for (std::size_t w : c.pipeline.hidden) s += (s.empty() ? "" : ",") + std::to_string(w);
                 return s;
               },
               [](CliConfig& c, std::string_view v) {
                 c.pipeline.hidden.clear();
                 if (trim(v).empty()) return;
                 for (auto part : split(v, ',')) {
                   const long long w = to_integer("model.hidden", part);
                   if (w < 1) bad_value("model.hidden", v, "positive widths");
                   c.pipeline.hidden.push_back(static_cast<std::size_t>(w));
                 }
               }});
  k.push_back(number("model.fading_threshold", "fade inputs below this fraction of the dominant one",
                     &P::fading_threshold));
  k.push_back(number("model.r2_threshold", "minimum R^2 for a symbolic fix", &P::r2_threshold));
  k.push_back({"model.refit_steps", "unpenalized iterations before symbolic fitting (<0: train.steps, 0: off)",
               [](const CliConfig& c) { return std::to_string(c.pipeline.refit_steps); },
               [](CliConfig& c, std::string_view v) {
                 c.pipeline.refit_steps = static_cast<int>(to_integer("model.refit_steps", v));
               }});
  k.push_back({"model.polish_steps", "iterations after symbolic fitting (<=0: train.steps/4)",
               [](const CliConfig& c) { return std::to_string(c.pipeline.polish_steps); },
               [](CliConfig& c, std::string_view v) {
                 c.pipeline.polish_steps = static_cast<int>(to_integer("model.polish_steps", v));
               }});
  k.push_back({"model.symbolic_samples", "rows per edge used for symbolic fitting",
               [](const CliConfig& c) { return std::to_string(c.pipeline.symbolic_samples); },
               [](CliConfig& c, std::string_view v) {
                 const long long n = to_integer("model.symbolic_samples", v);
                 if (n < 1) bad_value("model.symbolic_samples", v, "a positive integer");
                 c.pipeline.symbolic_samples = static_cast<std::size_t>(n);
               }});

  k.push_back({"seed", "master seed (also --seed)",
               [](const CliConfig& c) { return std::to_string(c.pipeline.seed); },
               [](CliConfig& c, std::string_view v) {
                 const long long s = to_integer("seed", v);
                 if (s < 0) bad_value("seed", v, "a non-negative integer");
                 c.pipeline.seed = static_cast<std::uint64_t>(s);
               }});
  k.push_back({"pipeline.parallel_states", "train the two state networks concurrently",
               [](const CliConfig& c) { return std::string(c.pipeline.parallel_states ? "true" : "false"); },
               [](CliConfig& c, std::string_view v) {
                 c.pipeline.parallel_states = to_bool("pipeline.parallel_states", v);
               }});
  k.push_back({"compare.threshold", "relative change that flags an entry",
               [](const CliConfig& c) { return fmt(c.compare_threshold); },
               [](CliConfig& c, std::string_view v) { c.compare_threshold = to_double("compare.threshold", v); }});
  k.push_back(toggle("plot.trajectory", "write trajectory.svg", &CliConfig::plot_trajectory));
  k.push_back(toggle("plot.derivative_fit", "write derivative_fit_<state>.svg", &CliConfig::plot_derivative_fit));
  k.push_back(toggle("plot.verification", "write verification.svg", &CliConfig::plot_verification));
  k.push_back({"plot.dir", "plot directory (empty: next to --out)", [](const CliConfig& c) { return c.plot_dir; },
               [](CliConfig& c, std::string_view v) { c.plot_dir = std::string(trim(v)); }});
  return k;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

void apply_setting(CliConfig& cfg, std::string_view key, std::string_view value) {
  key = trim(key);
  for (const auto& k : config_keys()) {
    if (k.key == key) {
      k.set(cfg, trim(value));
      return;
    }
  }
  throw InvalidArgument("unknown config key '" + std::string(key) + "'");
}

void apply_assignment(CliConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw InvalidArgument("--set expects key=value, got '" + std::string(assignment) + "'");
  }
  apply_setting(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
}

void apply_config_text(CliConfig& cfg, std::string_view text, std::string_view origin) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw InvalidArgument(std::string(origin) + ":" + std::to_string(line_no) + ": expected key = value");
      }
      try {
        apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
      } catch (const InvalidArgument& e) {
        throw InvalidArgument(std::string(origin) + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
}

CliConfig load_config(const std::string& source) {
  CliConfig cfg;
  if (source.empty() || source == "default") return cfg;
  std::ifstream in(source, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open config file '" + source + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  apply_config_text(cfg, buf.str(), source);
  return cfg;
}

std::string describe_keys() {
  const CliConfig defaults;
  std::size_t width = 0;
  for (const auto& k : config_keys()) width = std::max(width, k.key.size());
  std::ostringstream os;
  os << "Config keys (file lines 'key = value', or --set key=value):\n";
  for (const auto& k : config_keys()) {
    os << "  " << k.key << std::string(width - k.key.size() + 2, ' ') << "[" << k.get(defaults) << "]  " << k.help
       << "\n";
  }
  return os.str();
}

std::string format_profile(const ReferenceProfile& p) {
  std::string s;
  for (const auto& step : p.steps) s += (s.empty() ? "" : ",") + fmt(step.start_s) + ":" + fmt(step.v_ref);
  return s;
}

ReferenceProfile parse_profile(std::string_view text) {
  ReferenceProfile p;
  for (auto part : split(text, ',')) {
    const auto colon = part.find(':');
    if (colon == std::string_view::npos) bad_value("reference", text, "start_s:volts pairs");
    p.steps.push_back({to_double("reference", part.substr(0, colon)), to_double("reference", part.substr(colon + 1))});
  }
  p.validate();
  return p;
}

}  // namespace kansid::cli
