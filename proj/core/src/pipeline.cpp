#include "kansid/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "kansid/error.hpp"
#include "kansid/model_io.hpp"

namespace kansid {

std::string_view verification_source_name(VerificationSource s) noexcept {
  return s == VerificationSource::kFresh ? "fresh" : "training";
}

VerificationSource verification_source_from_name(std::string_view name) {
  if (name == "fresh") return VerificationSource::kFresh;
  if (name == "training") return VerificationSource::kTraining;
  throw InvalidArgument("unknown verification source '" + std::string(name) + "' (expected fresh|training)");
}

std::string_view input_fate_name(InputFate f) noexcept {
  switch (f) {
    case InputFate::kFaded: return "faded";
    case InputFate::kFixed: return "fixed";
    case InputFate::kSplineRetained: return "spline";
  }
  return "spline";
}

void PipelineConfig::validate() const {
  train.validate();
  if (stride < 1) throw InvalidArgument("dataset stride must be >= 1");
  if (grid_intervals < 1) throw InvalidArgument("grid intervals must be >= 1");
  if (grid_order < 0 || grid_order > kMaxSplineOrder) throw InvalidArgument("grid order out of range");
  if (!(grid_margin >= 0.0)) throw InvalidArgument("grid margin must be >= 0");
  for (std::size_t w : hidden) {
    if (w == 0) throw InvalidArgument("hidden layer widths must be positive");
  }
  if (!(fading_threshold >= 0.0)) throw InvalidArgument("fading threshold must be >= 0");
  if (!(r2_threshold > 0.0 && r2_threshold <= 1.0)) throw InvalidArgument("R^2 threshold must lie in (0, 1]");
  if (symbolic_samples < 10) throw InvalidArgument("symbolic fitting needs at least 10 samples per edge");
  if (diff_mode == DiffMode::kLiteral && !allow_literal) {
    throw InvalidArgument(
        "literal differences scale interior and boundary rows differently; set allow_literal to use them");
  }
  plant.validate();
  training_profile.validate();
  validation_profile.validate();
  if (!(duration_s > 0.0) || !(validation_duration_s > 0.0)) throw InvalidArgument("durations must be positive");
  if (noise_sigma && ((*noise_sigma)[0] < 0.0 || (*noise_sigma)[1] < 0.0)) {
    throw InvalidArgument("noise sigma must be >= 0");
  }
  if (controller.out_min > controller.out_max || controller.out_min < 0.0 || controller.out_max > 1.0) {
    throw InvalidArgument("controller limits must lie inside [0, 1]");
  }
}

namespace {

/// Node values at the input of layer `layer` for the given input rows.
std::vector<std::vector<double>> node_values(const KanNetwork& net, std::size_t layer,
                                             const std::vector<std::vector<double>>& rows) {
  std::vector<std::vector<double>> out;
  out.reserve(rows.size());
  for (const auto& g : rows) {
    std::vector<double> x = g;
    for (std::size_t l = 0; l < layer; ++l) {
      const KanLayer& L = net.layers[l];
      std::vector<double> next(L.out_dim, 0.0);
      for (std::size_t o = 0; o < L.out_dim; ++o) {
        for (std::size_t i = 0; i < L.in_dim; ++i) next[o] += edge_eval(L.edge(o, i), x[i]);
      }
      x = std::move(next);
    }
    out.push_back(std::move(x));
  }
  return out;
}

std::vector<double> column_of(const std::vector<std::vector<double>>& rows, std::size_t c) {
  std::vector<double> v(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) v[r] = rows[r][c];
  return v;
}

void scale_output(KanNetwork& net, double factor) {
  for (auto& e : net.layers.back().edges) {
    if (e.symbolic) {
      e.symbolic->c *= factor;
      e.symbolic->d *= factor;
    } else {
      e.w_base *= factor;
      e.w_spline *= factor;
    }
  }
}

struct InputStats {
  double mean = 0.0;
  double stdev = 1.0;
};

InputStats input_stats(std::span<const double> xs) {
  InputStats s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  var /= static_cast<double>(xs.size());
  s.stdev = var > 0.0 ? std::sqrt(var) : 1.0;
  return s;
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  // splitmix64 finalizer over the combined key
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Trajectory training_trajectory(const PipelineConfig& cfg) {
  SimulationOptions sim;
  sim.duration_s = cfg.duration_s;
  sim.noise_sigma = cfg.noise_sigma;
  sim.seed = stream_seed(cfg.seed, kTrainingSimStream);
  return simulate_plant(cfg.plant, cfg.controller, cfg.training_profile, sim);
}

Trajectory validation_trajectory(const PipelineConfig& cfg) {
  SimulationOptions sim;
  sim.duration_s = cfg.validation_duration_s;
  sim.noise_sigma = cfg.noise_sigma;
  sim.seed = stream_seed(cfg.seed, kValidationSimStream);
  return simulate_plant(cfg.plant, cfg.controller, cfg.validation_profile, sim);
}

StateIdentification identify_state(const SidDataset& ds, const PipelineConfig& cfg, std::uint64_t seed) {
  cfg.train.validate();
  if (ds.diff_mode == DiffMode::kLiteral && !cfg.allow_literal) {
    throw InvalidArgument("dataset uses literal differences; identification needs consistent mode or allow_literal");
  }
  if (ds.rows() < 10) throw InvalidArgument("identification needs at least 10 dataset rows");

  StateIdentification out;
  out.label = ds.state_label;

  double sq = 0.0;
  for (double t : ds.targets) sq += t * t;
  const double rms = std::sqrt(sq / static_cast<double>(ds.rows()));
  out.target_scale = rms > 0.0 ? rms : 1.0;
  SidDataset scaled = ds;
  for (double& t : scaled.targets) t /= out.target_scale;

  std::vector<std::size_t> shape{ds.cols()};
  shape.insert(shape.end(), cfg.hidden.begin(), cfg.hidden.end());
  shape.push_back(1);
  NetworkInit init;
  init.grid_intervals = cfg.grid_intervals;
  init.grid_order = cfg.grid_order;
  KanNetwork net = make_network(shape, ds.input_labels, seed, init);
  net.output_label = ds.state_label;
  net.ts_seconds = ds.ts_seconds;

  // Sampled rows used for hidden-layer grids and for symbolic fitting.
  const std::size_t n_sym = std::min(cfg.symbolic_samples, ds.rows());
  std::vector<std::vector<double>> sym_rows;
  sym_rows.reserve(n_sym);
  for (std::size_t s = 0; s < n_sym; ++s) {
    const std::size_t r = s * ds.rows() / n_sym;
    const auto row = ds.row(r);
    sym_rows.emplace_back(row.begin(), row.end());
  }

  for (std::size_t c = 0; c < ds.cols(); ++c) {
    const std::vector<double> col = ds.column(c);
    set_edge_grids(net, 0, c,
                   grid_from_samples(col, cfg.grid_intervals, cfg.grid_order, cfg.grid_margin, ds.input_labels[c]));
  }
  for (std::size_t l = 1; l < net.layers.size(); ++l) {
    const auto nodes = node_values(net, l, sym_rows);
    for (std::size_t i = 0; i < net.layers[l].in_dim; ++i) {
      std::vector<double> v = column_of(nodes, i);
      const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
      SplineGrid grid = *lo < *hi ? grid_from_samples(v, cfg.grid_intervals, cfg.grid_order, cfg.grid_margin)
                                  : make_uniform_grid(*lo - 1.0, *lo + 1.0, cfg.grid_intervals, cfg.grid_order);
      set_edge_grids(net, l, i, grid);
    }
  }

  // 1. sparsified training
  auto [trained, train_report] = lbfgs_train(net, scaled, cfg.train);
  net = std::move(trained);
  out.train = std::move(train_report);

  // 2. input fading
  const ActivationStats stats = activation_stats(net, scaled.inputs);
  const std::size_t n_in = net.layers.front().in_dim;
  const std::size_t first_width = net.layers.front().out_dim;
  std::vector<double> input_activation(n_in, 0.0);
  for (std::size_t i = 0; i < n_in; ++i) {
    for (std::size_t o = 0; o < first_width; ++o) {
      input_activation[i] = std::max(input_activation[i], stats.edge_mean[0][o * n_in + i]);
    }
  }
  const double dominant = *std::max_element(input_activation.begin(), input_activation.end());
  std::vector<char> faded(n_in, 0);
  for (std::size_t i = 0; i < n_in; ++i) {
    const double a = input_activation[i];
    // All-zero targets leave no dominant input to compare against.
    if (rms == 0.0 || a < cfg.fading_threshold * dominant) {
      faded[i] = 1;
      fix_input_zero_in_place(net, i);
    }
  }

  // Refit the surviving edges without the penalty so their shapes reflect the
  // data rather than the sparsity pull.
  if (cfg.refit_steps != 0) {
    TrainConfig refit_cfg = cfg.train;
    refit_cfg.lamb = 0.0;
    if (cfg.refit_steps > 0) refit_cfg.steps = cfg.refit_steps;
    (void)least_squares_fit(net, scaled);
    auto [refitted, refit_report] = lbfgs_train(net, scaled, refit_cfg);
    net = std::move(refitted);
    out.refit = std::move(refit_report);
  }

  // 3. symbolic fixing, layer by layer
  std::map<std::string, double> r2_by_edge;
  std::map<std::string, InputStats> edge_input_stats;
  std::map<std::string, Primitive> primitive_by_edge;
  // Within a layer the most confident edge is fixed first and the remaining
  // splines are re-solved before the next pick, so collinear inputs cannot
  // park curvature on a weakly determined edge.
  auto simplest_passing = [&](const std::vector<SymbolicCandidate>& cands) -> const SymbolicCandidate* {
    if (!cands.empty() && !cands.front().r2) return &cands.front();
    for (Primitive p : kAllPrimitives) {
      for (const auto& c : cands) {
        if (c.fn.primitive == p && c.r2 && *c.r2 >= cfg.r2_threshold) return &c;
      }
    }
    return nullptr;
  };
  std::map<std::string, std::vector<SymbolicCandidate>> candidates;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto nodes = node_values(net, l, sym_rows);
    std::vector<std::pair<std::size_t, std::size_t>> pending;
    for (std::size_t o = 0; o < net.layers[l].out_dim; ++o) {
      for (std::size_t i = 0; i < net.layers[l].in_dim; ++i) {
        const std::string id = edge_id(l, o, i);
        edge_input_stats[id] = input_stats(column_of(nodes, i));
        if (net.layers[l].edge(o, i).symbolic) {
          primitive_by_edge[id] = net.layers[l].edge(o, i).symbolic->primitive;
        } else {
          pending.emplace_back(o, i);
        }
      }
    }
    while (!pending.empty()) {
      std::size_t best = pending.size();
      double best_r2 = -std::numeric_limits<double>::infinity();
      Primitive best_primitive = Primitive::kZero;
      for (std::size_t k = 0; k < pending.size(); ++k) {
        const auto [o, i] = pending[k];
        const std::string id = edge_id(l, o, i);
        const std::vector<double> xs = column_of(nodes, i);
        std::vector<SymbolicCandidate>& cands = candidates[id] = suggest_symbolic(xs, edge_samples(net, l, o, i, xs));
        const SymbolicCandidate* chosen = simplest_passing(cands);
        if (chosen == nullptr) continue;
        const double r2 = chosen->r2.value_or(std::numeric_limits<double>::infinity());
        if (r2 > best_r2) {
          best = k;
          best_r2 = r2;
          best_primitive = chosen->fn.primitive;
        }
      }
      if (best == pending.size()) break;
      const auto [o, i] = pending[best];
      const std::vector<double> xs = column_of(nodes, i);
      const std::vector<double> ys = edge_samples(net, l, o, i, xs);
      const std::string id = edge_id(l, o, i);
      r2_by_edge[id] = fix_symbolic(net, l, o, i, best_primitive, xs, ys);
      primitive_by_edge[id] = best_primitive;
      pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(best));
      if (cfg.refit_steps != 0 && !pending.empty()) (void)least_squares_fit(net, scaled);
    }
  }
  for (auto& [id, cands] : candidates) out.candidates.emplace_back(id, std::move(cands));

  // 4. polish: refit the (c, d) of fitted primitives and any remaining splines
  // on the data loss alone. Linear edges are written in standardized input
  // coordinates first so the refit is well conditioned.
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    KanLayer& layer = net.layers[l];
    for (std::size_t o = 0; o < layer.out_dim; ++o) {
      for (std::size_t i = 0; i < layer.in_dim; ++i) {
        SplineEdge& e = layer.edge(o, i);
        if (!e.symbolic || e.symbolic->primitive == Primitive::kZero) continue;
        e.trainable = true;
        if (e.symbolic->primitive == Primitive::kLinear) {
          const InputStats& s = edge_input_stats[edge_id(l, o, i)];
          SymbolicFn& f = *e.symbolic;
          const double slope = f.c * f.a;
          const double offset = f.c * f.b + f.d;
          f.a = 1.0 / s.stdev;
          f.b = -s.mean / s.stdev;
          f.c = slope * s.stdev;
          f.d = offset + slope * s.mean;
        }
      }
    }
  }
  TrainConfig polish_cfg = cfg.train;
  polish_cfg.lamb = 0.0;
  polish_cfg.steps = cfg.polish_steps > 0 ? cfg.polish_steps : std::max(1, cfg.train.steps / 4);
  auto [polished, polish_report] = lbfgs_train(net, scaled, polish_cfg);
  net = std::move(polished);
  out.polish = std::move(polish_report);
  for (auto& layer : net.layers) {
    for (auto& e : layer.edges) {
      if (!e.symbolic) continue;
      e.trainable = false;
      if (e.symbolic->primitive == Primitive::kLinear) {
        SymbolicFn& f = *e.symbolic;
        const double slope = f.c * f.a;
        const double offset = f.c * f.b + f.d;
        f = SymbolicFn{Primitive::kLinear, 1.0, 0.0, slope, offset};
      }
    }
  }
  scale_output(net, out.target_scale);

  // 5. report per input
  for (std::size_t i = 0; i < n_in; ++i) {
    InputReport ir;
    ir.label = ds.input_labels[i];
    ir.activation = input_activation[i];
    bool all_symbolic = true;
    double min_r2 = 1.0;
    bool have_r2 = false;
    for (std::size_t o = 0; o < net.layers.front().out_dim; ++o) {
      const std::string id = edge_id(0, o, i);
      if (!net.layers.front().edge(o, i).symbolic) all_symbolic = false;
      if (auto it = r2_by_edge.find(id); it != r2_by_edge.end()) {
        min_r2 = std::min(min_r2, it->second);
        have_r2 = true;
      }
      if (auto it = primitive_by_edge.find(id); it != primitive_by_edge.end() && !ir.primitive) ir.primitive = it->second;
    }
    if (faded[i]) {
      ir.fate = InputFate::kFaded;
      ir.primitive = Primitive::kZero;
    } else if (all_symbolic) {
      ir.fate = InputFate::kFixed;
      if (have_r2) ir.r2 = min_r2;
    } else {
      ir.fate = InputFate::kSplineRetained;
      ir.primitive.reset();
    }
    out.inputs.push_back(std::move(ir));
  }

  // 6. equation
  try {
    SymbolicEquation raw = to_equation(net);
    raw.edge_r2 = r2_by_edge;
    out.equation = rescale_by_sample_period(raw, ds.ts_seconds);
    out.raw_equation = std::move(raw);
  } catch (const NotSymbolic&) {
    // reported through the input fates; the trained network is kept
  }
  out.network = std::move(net);
  return out;
}

StateSpaceModel assemble_state_space(const SymbolicEquation& eq_il, const SymbolicEquation& eq_vc) {
  if (!eq_il.scale_applied || !eq_vc.scale_applied) {
    throw InvalidArgument("state-space assembly needs equations rescaled by 1/Ts");
  }
  if (eq_il.input_labels != eq_vc.input_labels) throw InvalidArgument("equations have different input labels");
  auto index_of = [&](std::string_view label) {
    const auto& labels = eq_il.input_labels;
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) throw InvalidArgument("equation inputs lack '" + std::string(label) + "'");
    return static_cast<std::size_t>(it - labels.begin());
  };
  if (eq_il.slopes.size() != eq_il.input_labels.size() || eq_vc.slopes.size() != eq_vc.input_labels.size()) {
    throw InvalidArgument("equation slope count does not match its labels");
  }
  const std::size_t ii = index_of(kStateIL);
  const std::size_t iv = index_of(kStateVC);
  const std::size_t id = index_of(kInputDuty);

  StateSpaceModel m;
  const SymbolicEquation* rows[2] = {&eq_il, &eq_vc};
  for (int r = 0; r < 2; ++r) {
    m.a(r, 0) = rows[r]->slopes[ii];
    m.a(r, 1) = rows[r]->slopes[iv];
    m.b(r, 0) = rows[r]->slopes[id];
    m.b(r, 1) = rows[r]->constant;
  }
  m.cm = Eigen::RowVector2d(0.0, 1.0);
  m.dm = Eigen::RowVector2d::Zero();
  return m;
}

VerificationResult verify_model(const StateSpaceModel& m, const Trajectory& traj) {
  traj.validate();
  if (traj.rows() == 0) throw InvalidArgument("verification trajectory is empty");
  VerificationResult v;
  v.predicted = simulate_statespace(m, traj.duty, traj.ts_seconds, Eigen::Vector2d(traj.i_l[0], traj.v_c[0]));
  double sq = 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < traj.rows(); ++k) {
    const double e = v.predicted[k] - traj.v_c[k];
    sq += e * e;
    sum += traj.v_c[k];
    v.max_abs_err = std::max(v.max_abs_err, std::abs(e));
  }
  v.rmse = std::sqrt(sq / static_cast<double>(traj.rows()));
  v.mean_output = sum / static_cast<double>(traj.rows());
  return v;
}

std::vector<ModelDelta> compare_models(const StateSpaceModel& ref, const StateSpaceModel& next, double rel_threshold) {
  if (ref.state_labels != next.state_labels || ref.input_labels != next.input_labels) {
    throw InvalidArgument("models have different state or input labels");
  }
  constexpr double kEps = 1e-12;
  std::vector<ModelDelta> out;
  auto add = [&](const char* name, const auto& r, const auto& n) {
    if (r.rows() != n.rows() || r.cols() != n.cols()) {
      throw InvalidArgument(std::string("matrix ") + name + " has mismatched shapes");
    }
    for (int i = 0; i < r.rows(); ++i) {
      for (int j = 0; j < r.cols(); ++j) {
        ModelDelta d;
        d.matrix = name;
        d.row = i;
        d.col = j;
        d.ref = r(i, j);
        d.value = n(i, j);
        // signed like the reference, so a halved entry reads -50% whatever its sign
        const double denom = std::max(std::abs(d.ref), kEps);
        d.relative = (d.value - d.ref) / (d.ref < 0.0 ? -denom : denom);
        d.flagged = std::abs(d.relative) >= rel_threshold;
        out.push_back(d);
      }
    }
  };
  add("A", ref.a, next.a);
  add("B", ref.b, next.b);
  add("Cm", ref.cm, next.cm);
  add("Dm", ref.dm, next.dm);
  return out;
}

IdentificationReport full_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  IdentificationReport report;
  report.config = cfg;
  report.reference = true_state_space(cfg.plant);

  const char* stage = "simulate";
  try {
    const Trajectory traj = training_trajectory(cfg);

    stage = "dataset";
    const SidDataset ds_il = build_dataset(traj, kStateIL, cfg.diff_mode, cfg.stride);
    const SidDataset ds_vc = build_dataset(traj, kStateVC, cfg.diff_mode, cfg.stride);

    stage = "identify";
    const std::uint64_t seed_il = stream_seed(cfg.seed, 0);
    const std::uint64_t seed_vc = stream_seed(cfg.seed, 1);
    if (cfg.parallel_states) {
      auto fut = std::async(std::launch::async, [&] { return identify_state(ds_il, cfg, seed_il); });
      StateIdentification vc = identify_state(ds_vc, cfg, seed_vc);
      report.states.push_back(fut.get());
      report.states.push_back(std::move(vc));
    } else {
      report.states.push_back(identify_state(ds_il, cfg, seed_il));
      report.states.push_back(identify_state(ds_vc, cfg, seed_vc));
    }

    stage = "assemble";
    if (!report.states[0].equation || !report.states[1].equation) {
      std::string which;
      for (const auto& s : report.states) {
        if (!s.equation) which += (which.empty() ? "" : ", ") + s.label;
      }
      report.failed_stage = stage;
      report.error = "not fully symbolic: " + which;
      return report;
    }
    report.model = assemble_state_space(*report.states[0].equation, *report.states[1].equation);

    stage = "verify";
    report.same_data_verification = verify_model(*report.model, traj);
    report.same_data_verification->source = "training";
    if (cfg.verification == VerificationSource::kFresh) {
      const Trajectory fresh = validation_trajectory(cfg);
      report.verification = verify_model(*report.model, fresh);
      report.verification->source = "fresh";
    } else {
      report.verification = report.same_data_verification;
    }
  } catch (const Error& err) {
    report.failed_stage = stage;
    report.error = err.what();
  }
  return report;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& doc, const char* field, int rows, int cols) {
  const auto& v = json_detail::require(doc, field, "");
  if (!v.is_array() || static_cast<int>(v.size()) != rows) {
    throw ParseError(std::string("field '") + field + "' must be a " + std::to_string(rows) + "x" +
                     std::to_string(cols) + " matrix");
  }
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (!v[i].is_array() || static_cast<int>(v[i].size()) != cols) {
      throw ParseError(std::string("field '") + field + "' row " + std::to_string(i) + " has the wrong length");
    }
    for (int j = 0; j < cols; ++j) {
      if (!v[i][j].is_number()) throw ParseError(std::string("field '") + field + "' must hold numbers");
      m(i, j) = v[i][j].get<double>();
    }
  }
  return m;
}

std::vector<std::string> labels_from_json(const nlohmann::json& doc, const char* field) {
  const auto& v = json_detail::require(doc, field, "");
  if (!v.is_array()) throw ParseError(std::string("field '") + field + "' must be an array");
  std::vector<std::string> out;
  for (const auto& s : v) {
    if (!s.is_string()) throw ParseError(std::string("field '") + field + "' must hold strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

nlohmann::json profile_json(const ReferenceProfile& p) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : p.steps) steps.push_back({{"start_s", s.start_s}, {"v_ref", s.v_ref}});
  return steps;
}

nlohmann::json equation_json(const SymbolicEquation& eq) { return save_equation(eq); }

}  // namespace

nlohmann::json state_space_to_json(const StateSpaceModel& m) {
  return {{"A", matrix_json(m.a)},
          {"B", matrix_json(m.b)},
          {"Cm", matrix_json(m.cm)},
          {"Dm", matrix_json(m.dm)},
          {"input_labels", m.input_labels},
          {"state_labels", m.state_labels}};
}

StateSpaceModel state_space_from_json(const nlohmann::json& doc) {
  StateSpaceModel m;
  m.a = matrix_from_json(doc, "A", 2, 2);
  m.b = matrix_from_json(doc, "B", 2, 2);
  m.cm = matrix_from_json(doc, "Cm", 1, 2);
  m.dm = matrix_from_json(doc, "Dm", 1, 2);
  m.input_labels = labels_from_json(doc, "input_labels");
  if (doc.contains("state_labels")) m.state_labels = labels_from_json(doc, "state_labels");
  if (m.input_labels.size() != 2 || m.state_labels.size() != 2) {
    throw ParseError("state-space labels must name two inputs and two states");
  }
  if (!m.all_finite()) throw ParseError("state-space matrices must be finite");
  return m;
}

nlohmann::json verification_to_json(const VerificationResult& v) {
  return {{"rmse", v.rmse}, {"max_err", v.max_abs_err}, {"mean_output", v.mean_output}, {"trajectory_source", v.source}};
}

nlohmann::json train_report_to_json(const TrainReport& r) {
  return {{"losses", r.total_loss},
          {"data_losses", r.data_loss},
          {"penalties", r.penalty},
          {"initial_loss", r.initial_loss},
          {"grad_norm", r.final_gradient_norm},
          {"line_search_failures", r.line_search_failures},
          {"evaluations", r.evaluations}};
}

nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg) {
  nlohmann::json hidden = cfg.hidden;
  nlohmann::json j;
  j["train"] = {{"steps", cfg.train.steps},
                {"lamb", cfg.train.lamb},
                {"lamb_entropy", cfg.train.lamb_entropy},
                {"lbfgs_memory", cfg.train.lbfgs_memory},
                {"wolfe_c1", cfg.train.wolfe_c1},
                {"wolfe_c2", cfg.train.wolfe_c2},
                {"max_line_search_evals", cfg.train.max_line_search_evals},
                {"gradient_tolerance", cfg.train.gradient_tolerance},
                {"loss_reduction", std::string(reduction_name(cfg.train.loss_reduction))}};
  j["data"] = {{"diff_mode", std::string(diff_mode_name(cfg.diff_mode))},
               {"allow_literal", cfg.allow_literal},
               {"stride", cfg.stride}};
  j["model"] = {{"grid_intervals", cfg.grid_intervals},
                {"grid_order", cfg.grid_order},
                {"grid_margin", cfg.grid_margin},
                {"hidden", hidden},
                {"fading_threshold", cfg.fading_threshold},
                {"r2_threshold", cfg.r2_threshold},
                {"refit_steps", cfg.refit_steps},
                {"polish_steps", cfg.polish_steps},
                {"symbolic_samples", cfg.symbolic_samples}};
  j["plant"] = {{"v_in", cfg.plant.v_in},   {"ind_l", cfg.plant.ind_l}, {"cap_c", cfg.plant.cap_c},
                {"load_r", cfg.plant.load_r}, {"r_l", cfg.plant.r_l},     {"r_c", cfg.plant.r_c},
                {"r_on", cfg.plant.r_on},   {"f_sw", cfg.plant.f_sw}};
  j["controller"] = {{"kp", cfg.controller.kp}, {"ki", cfg.controller.ki}, {"integrator", cfg.controller.integrator}};
  j["simulation"] = {{"duration_s", cfg.duration_s},
                     {"training_profile", profile_json(cfg.training_profile)},
                     {"validation_duration_s", cfg.validation_duration_s},
                     {"validation_profile", profile_json(cfg.validation_profile)},
                     {"verification", std::string(verification_source_name(cfg.verification))}};
  if (cfg.noise_sigma) j["simulation"]["noise_sigma"] = *cfg.noise_sigma;
  return j;
}

nlohmann::json report_to_json(const IdentificationReport& report) {
  nlohmann::json j;
  nlohmann::json states = nlohmann::json::array();
  for (const auto& s : report.states) {
    nlohmann::json js;
    js["label"] = s.label;
    js["train"] = train_report_to_json(s.train);
    js["refit"] = train_report_to_json(s.refit);
    js["polish"] = train_report_to_json(s.polish);
    js["target_scale"] = s.target_scale;
    nlohmann::json inputs = nlohmann::json::array();
    for (const auto& in : s.inputs) {
      nlohmann::json ji{{"label", in.label}, {"fate", std::string(input_fate_name(in.fate))}, {"activation", in.activation}};
      if (in.primitive) ji["primitive"] = std::string(primitive_name(*in.primitive));
      if (in.r2) ji["r2"] = *in.r2;
      inputs.push_back(std::move(ji));
    }
    js["inputs"] = std::move(inputs);
    if (s.equation) js["equation"] = equation_json(*s.equation);
    if (s.raw_equation) js["raw_equation"] = equation_json(*s.raw_equation);
    nlohmann::json cands = nlohmann::json::object();
    for (const auto& [id, list] : s.candidates) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& c : list) {
        nlohmann::json jc{{"primitive", std::string(primitive_name(c.fn.primitive))}};
        if (c.r2) jc["r2"] = *c.r2;
        arr.push_back(std::move(jc));
      }
      cands[id] = std::move(arr);
    }
    js["symbolic_candidates"] = std::move(cands);
    js["network"] = save_model(s.network);
    states.push_back(std::move(js));
  }
  j["states"] = std::move(states);
  if (report.model) j["state_space"] = state_space_to_json(*report.model);
  j["reference_state_space"] = state_space_to_json(report.reference);
  if (report.verification) j["verification"] = verification_to_json(*report.verification);
  if (report.same_data_verification) j["same_data_verification"] = verification_to_json(*report.same_data_verification);
  if (!report.ok()) j["failure"] = {{"stage", report.failed_stage}, {"error", report.error}};
  j["config"] = pipeline_config_to_json(report.config);
  j["seed"] = report.config.seed;
  return j;
}

nlohmann::json deltas_to_json(const std::vector<ModelDelta>& deltas) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& d : deltas) {
    arr.push_back({{"matrix", d.matrix},
                   {"row", d.row},
                   {"col", d.col},
                   {"ref", d.ref},
                   {"new", d.value},
                   {"relative", d.relative},
                   {"flagged", d.flagged}});
  }
  return arr;
}

}  // namespace kansid
