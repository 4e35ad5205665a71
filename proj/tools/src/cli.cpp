#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "config.hpp"
#include "io.hpp"
#include "kansid/error.hpp"
#include "kansid/model_io.hpp"
#include "kansid/pipeline.hpp"
#include "plot.hpp"

namespace kansid::cli {
namespace {

namespace fs = std::filesystem;

struct Common {
  std::string config = "default";
  std::optional<long long> seed;
  std::string out;
  std::vector<std::string> sets;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "config file, or 'default' for the built-in defaults")
      ->capture_default_str();
  sub->add_option("--seed", c.seed, "master seed (overrides the 'seed' key)");
  sub->add_option("--out", c.out, "output file")->required();
  sub->add_option("--set", c.sets, "override a config key: --set key=value (repeatable)");
}

CliConfig resolve(const Common& c) {
  CliConfig cfg = load_config(c.config);
  for (const auto& s : c.sets) apply_assignment(cfg, s);
  if (c.seed) {
    if (*c.seed < 0) throw InvalidArgument("--seed must be non-negative");
    cfg.pipeline.seed = static_cast<std::uint64_t>(*c.seed);
  }
  return cfg;
}

fs::path plot_path(const CliConfig& cfg, const std::string& out, const std::string& name) {
  const fs::path dir = cfg.plot_dir.empty() ? fs::path(out).parent_path() : fs::path(cfg.plot_dir);
  return dir / name;
}

// a pipeline report carries its model under "state_space"
StateSpaceModel read_state_space(const std::string& path) {
  const nlohmann::json doc = read_json(path);
  if (doc.is_object() && doc.contains("state_space")) return state_space_from_json(doc.at("state_space"));
  return state_space_from_json(doc);
}

std::size_t state_index(const std::string& state) {
  if (state == kStateIL) return 0;
  if (state == kStateVC) return 1;
  throw InvalidArgument("unknown state '" + state + "' (expected i_L or v_C)");
}

void plot_trajectory(const CliConfig& cfg, const std::string& out, const Trajectory& traj) {
  PlotData d;
  d.x = traj.time;
  d.series = {{"v_C [V]", traj.v_c}, {"i_L [A]", traj.i_l}};
  d.y_label = "state";
  emit_plot(PlotKind::kTrajectory, d, plot_path(cfg, out, "trajectory.svg"));
}

void plot_derivative_fit(const CliConfig& cfg, const std::string& out, const Trajectory& traj, const SidDataset& ds,
                         const KanNetwork& net) {
  PlotData d;
  Series target{"target", ds.targets};
  Series fit{"network", {}};
  fit.y.reserve(ds.rows());
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    d.x.push_back(traj.time[r * ds.stride]);
    fit.y.push_back(evaluate(net, ds.row(r)).front());
  }
  d.series = {std::move(target), std::move(fit)};
  d.y_label = "Ts * d" + ds.state_label + "/dt";
  d.title = "Finite-difference target vs network (" + ds.state_label + ")";
  emit_plot(PlotKind::kDerivativeFit, d, plot_path(cfg, out, "derivative_fit_" + ds.state_label + ".svg"));
}

void plot_verification(const CliConfig& cfg, const std::string& out, const Trajectory& traj,
                       const VerificationResult& v) {
  PlotData d;
  d.x = traj.time;
  d.series = {{"plant v_C", traj.v_c}, {"identified model", v.predicted}};
  d.y_label = "v_out [V]";
  d.rmse = v.rmse;
  emit_plot(PlotKind::kVerification, d, plot_path(cfg, out, "verification.svg"));
}

int cmd_simulate(const Common& c, bool validation, std::ostream& err) {
  const CliConfig cfg = resolve(c);
  cfg.pipeline.validate();
  const Trajectory traj = validation ? validation_trajectory(cfg.pipeline) : training_trajectory(cfg.pipeline);
  write_trajectory(c.out, traj);
  if (cfg.plot_trajectory) plot_trajectory(cfg, c.out, traj);
  err << "simulate: " << traj.rows() << " samples at Ts = " << traj.ts_seconds << " s -> " << c.out << "\n";
  return kExitOk;
}

int cmd_train(const Common& c, const std::string& trajectory, const std::string& state, std::ostream& err) {
  const CliConfig cfg = resolve(c);
  cfg.pipeline.validate();
  const std::size_t idx = state_index(state);
  const Trajectory traj = read_trajectory(trajectory);
  const SidDataset ds = build_dataset(traj, state, cfg.pipeline.diff_mode, cfg.pipeline.stride);
  const StateIdentification id = identify_state(ds, cfg.pipeline, stream_seed(cfg.pipeline.seed, idx));
  write_json(c.out, save_model(id.network));
  if (cfg.plot_derivative_fit) plot_derivative_fit(cfg, c.out, traj, ds, id.network);
  err << "train " << state << ": final loss "
      << (id.polish.total_loss.empty() ? 0.0 : id.polish.total_loss.back()) << "\n";
  for (const auto& in : id.inputs) {
    err << "  " << in.label << ": " << input_fate_name(in.fate);
    if (in.primitive) err << " (" << primitive_name(*in.primitive) << ")";
    err << "\n";
  }
  if (!id.equation) err << "  not every edge is symbolic; extract will refuse this model\n";
  return kExitOk;
}

int cmd_extract(const Common& c, const std::string& model, std::ostream& err) {
  (void)resolve(c);
  const KanNetwork net = load_model(read_json(model));
  if (!(net.ts_seconds > 0.0)) throw InvalidArgument("model carries no sample period; cannot rescale by 1/Ts");
  const SymbolicEquation eq = rescale_by_sample_period(to_equation(net), net.ts_seconds);
  write_json(c.out, save_equation(eq));
  err << "extract: " << eq.to_string() << "\n";
  return kExitOk;
}

int cmd_assemble(const Common& c, const std::string& il, const std::string& vc, std::ostream& err) {
  (void)resolve(c);
  const StateSpaceModel m = assemble_state_space(load_equation(read_json(il)), load_equation(read_json(vc)));
  write_json(c.out, state_space_to_json(m));
  err << "assemble: A = [[" << m.a(0, 0) << ", " << m.a(0, 1) << "], [" << m.a(1, 0) << ", " << m.a(1, 1) << "]]\n";
  return kExitOk;
}

int cmd_verify(const Common& c, const std::string& model, const std::string& trajectory, std::ostream& err) {
  const CliConfig cfg = resolve(c);
  const StateSpaceModel m = read_state_space(model);
  const Trajectory traj = read_trajectory(trajectory);
  VerificationResult v = verify_model(m, traj);
  v.source = fs::path(trajectory).filename().string();
  write_json(c.out, verification_to_json(v));
  if (cfg.plot_verification) plot_verification(cfg, c.out, traj, v);
  err << "verify: rmse " << v.rmse << " V, max error " << v.max_abs_err << " V\n";
  return kExitOk;
}

int cmd_compare(const Common& c, const std::string& ref, const std::string& next, std::ostream& err) {
  const CliConfig cfg = resolve(c);
  if (!(cfg.compare_threshold > 0.0)) throw InvalidArgument("compare.threshold must be positive");
  const auto deltas =
      compare_models(read_state_space(ref), read_state_space(next), cfg.compare_threshold);
  const auto flagged = std::count_if(deltas.begin(), deltas.end(), [](const ModelDelta& d) { return d.flagged; });
  nlohmann::json doc{{"threshold", cfg.compare_threshold}, {"flagged", flagged}, {"entries", deltas_to_json(deltas)}};
  write_json(c.out, doc);
  err << "compare: " << flagged << " of " << deltas.size() << " entries changed by >= " << cfg.compare_threshold * 100
      << "%\n";
  for (const auto& d : deltas) {
    if (!d.flagged) continue;
    err << "  " << d.matrix << "[" << d.row + 1 << "][" << d.col + 1 << "]: " << d.ref << " -> " << d.value << " ("
        << d.relative * 100 << "%)\n";
  }
  return kExitOk;
}

int cmd_pipeline(const Common& c, std::ostream& err) {
  const CliConfig cfg = resolve(c);
  const IdentificationReport report = full_pipeline(cfg.pipeline);
  write_json(c.out, report_to_json(report));

  if (cfg.plot_trajectory || cfg.plot_derivative_fit) {
    const Trajectory traj = training_trajectory(cfg.pipeline);
    if (cfg.plot_trajectory) plot_trajectory(cfg, c.out, traj);
    if (cfg.plot_derivative_fit) {
      for (const auto& s : report.states) {
        plot_derivative_fit(cfg, c.out, traj, build_dataset(traj, s.label, cfg.pipeline.diff_mode, cfg.pipeline.stride),
                            s.network);
      }
    }
  }
  if (cfg.plot_verification && report.verification) {
    const Trajectory traj = cfg.pipeline.verification == VerificationSource::kFresh
                                ? validation_trajectory(cfg.pipeline)
                                : training_trajectory(cfg.pipeline);
    plot_verification(cfg, c.out, traj, *report.verification);
  }

  if (!report.ok()) {
    err << "pipeline failed at " << report.failed_stage << ": " << report.error << "\n";
    return kExitDomain;
  }
  for (const auto& s : report.states) {
    if (s.equation) err << "  " << s.equation->to_string() << "\n";
  }
  if (report.verification) {
    err << "pipeline: verification rmse " << report.verification->rmse << " V (" << report.verification->source
        << ")\n";
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Identify buck-converter state-space models with Kolmogorov-Arnold networks", "kansid"};
  app.require_subcommand(1, 1);
  app.footer(describe_keys());

  Common common;
  bool validation = false;
  std::string trajectory;
  std::string state;
  std::string model;
  std::string eq_il;
  std::string eq_vc;
  std::string ref;
  std::string next;

  auto* simulate = app.add_subcommand("simulate", "simulate the plant and write a trajectory CSV");
  add_common(simulate, common);
  simulate->add_flag("--validation", validation, "use the validation reference schedule and duration");

  auto* train = app.add_subcommand("train", "identify one state from a trajectory and write the model JSON");
  add_common(train, common);
  train->add_option("--trajectory", trajectory, "trajectory CSV")->required();
  train->add_option("--state", state, "i_L or v_C")->required();

  auto* extract = app.add_subcommand("extract", "model JSON -> Ts-rescaled equation JSON");
  add_common(extract, common);
  extract->add_option("--model", model, "model JSON")->required();

  auto* assemble = app.add_subcommand("assemble", "two equation JSONs -> state-space JSON");
  add_common(assemble, common);
  assemble->add_option("--il", eq_il, "equation JSON of i_L")->required();
  assemble->add_option("--vc", eq_vc, "equation JSON of v_C")->required();

  auto* verify = app.add_subcommand("verify", "replay a trajectory through a state-space model");
  add_common(verify, common);
  verify->add_option("--model", model, "state-space JSON")->required();
  verify->add_option("--trajectory", trajectory, "trajectory CSV")->required();

  auto* compare = app.add_subcommand("compare", "relative differences between two state-space models");
  add_common(compare, common);
  compare->add_option("--ref", ref, "reference state-space JSON")->required();
  compare->add_option("--new", next, "new state-space JSON")->required();

  auto* pipeline = app.add_subcommand("pipeline", "simulate, identify, assemble and verify in one go");
  add_common(pipeline, common);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const CLI::App* target = &app;
    for (const auto* sub : app.get_subcommands()) target = sub;
    out << target->help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(common, validation, err);
    if (*train) return cmd_train(common, trajectory, state, err);
    if (*extract) return cmd_extract(common, model, err);
    if (*assemble) return cmd_assemble(common, eq_il, eq_vc, err);
    if (*verify) return cmd_verify(common, model, trajectory, err);
    if (*compare) return cmd_compare(common, ref, next, err);
    if (*pipeline) return cmd_pipeline(common, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    if (const auto* ns = dynamic_cast<const NotSymbolic*>(&e)) {
      for (const auto& edge : ns->offending_edges()) err << "  non-symbolic edge " << edge << "\n";
    }
    return e.is_usage_error() ? kExitUsage : kExitDomain;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed JSON: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  err << "error: no subcommand\n" << app.help();
  return kExitUsage;
}

}  // namespace kansid::cli
