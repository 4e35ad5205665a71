#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kansid/dataset.hpp"
#include "kansid/kan.hpp"
#include "kansid/plant.hpp"
#include "kansid/symbolic.hpp"
#include "kansid/train.hpp"

namespace kansid {

enum class VerificationSource { kFresh, kTraining };

[[nodiscard]] std::string_view verification_source_name(VerificationSource s) noexcept;
[[nodiscard]] VerificationSource verification_source_from_name(std::string_view name);

struct PipelineConfig {
  TrainConfig train;
  DiffMode diff_mode = DiffMode::kConsistent;
  /// Literal differences mix Ts and 2*Ts scaling; identification refuses them
  /// unless this is set.
  bool allow_literal = false;
  std::size_t stride = 10;
  int grid_intervals = 5;
  int grid_order = 3;
  double grid_margin = 0.05;
  /// Hidden layer widths; the network shape is [3, hidden..., 1].
  std::vector<std::size_t> hidden;
  /// An input fades when its largest first-layer edge mean is below this
  /// fraction of the dominant input's. Every input fades for all-zero targets.
  double fading_threshold = 1e-3;
  double r2_threshold = 0.99;
  /// Unpenalized iterations between fading and symbolic fitting; < 0 means
  /// train.steps, 0 skips the refit.
  int refit_steps = -1;
  /// Polish iterations after symbolic fixing; <= 0 means train.steps / 4.
  int polish_steps = 0;
  /// Rows per edge used for symbolic fitting.
  std::size_t symbolic_samples = 1000;
  VerificationSource verification = VerificationSource::kFresh;

  BuckParams plant;
  PiController controller;
  ReferenceProfile training_profile = default_training_profile();
  double duration_s = 5.0;
  ReferenceProfile validation_profile = default_validation_profile();
  double validation_duration_s = 2.0;
  std::optional<std::array<double, 2>> noise_sigma;

  std::uint64_t seed = 7;
  /// Train the two state networks on separate threads.
  bool parallel_states = true;

  void validate() const;
};

enum class InputFate { kFaded, kFixed, kSplineRetained };
[[nodiscard]] std::string_view input_fate_name(InputFate f) noexcept;

struct InputReport {
  std::string label;
  InputFate fate = InputFate::kSplineRetained;
  std::optional<Primitive> primitive;
  std::optional<double> r2;
  /// Largest first-layer edge mean after sparsified training, in units of
  /// the normalized target.
  double activation = 0.0;
};

struct StateIdentification {
  std::string label;
  KanNetwork network;
  TrainReport train;
  TrainReport refit;
  TrainReport polish;
  std::vector<InputReport> inputs;
  /// Targets are divided by this before training and the network output is
  /// multiplied back afterwards.
  double target_scale = 1.0;
  /// Fitted equation before and after the 1/Ts rescale; empty when some edge
  /// could not be symbolized.
  std::optional<SymbolicEquation> raw_equation;
  std::optional<SymbolicEquation> equation;
  /// Every symbolic-fit R^2 considered, keyed by edge id.
  std::vector<std::pair<std::string, std::vector<SymbolicCandidate>>> candidates;
};

/// Train, fade, symbolize, polish and extract the equation for one state.
[[nodiscard]] StateIdentification identify_state(const SidDataset& ds, const PipelineConfig& cfg,
                                                 std::uint64_t seed);

/// A from the i_L / v_C slopes, B = [D slope, constant] per row,
/// Cm = [0 1], Dm = 0. Row order follows the argument order.
[[nodiscard]] StateSpaceModel assemble_state_space(const SymbolicEquation& eq_il, const SymbolicEquation& eq_vc);

struct VerificationResult {
  std::vector<double> predicted;
  double rmse = 0.0;
  double max_abs_err = 0.0;
  double mean_output = 0.0;
  std::string source;
};

/// Replays the trajectory's duty from its initial state and compares the
/// model output with the recorded v_C column.
[[nodiscard]] VerificationResult verify_model(const StateSpaceModel& m, const Trajectory& traj);

struct ModelDelta {
  std::string matrix;
  int row = 0;
  int col = 0;
  double ref = 0.0;
  double value = 0.0;
  double relative = 0.0;
  bool flagged = false;
};

/// Relative change (new - ref) / (sign(ref) * max(|ref|, 1e-12)) of every
/// entry of A, B, Cm and Dm, with sign(0) = +1; entries with |change| >=
/// rel_threshold are flagged.
[[nodiscard]] std::vector<ModelDelta> compare_models(const StateSpaceModel& ref, const StateSpaceModel& next,
                                                     double rel_threshold);

struct IdentificationReport {
  std::vector<StateIdentification> states;
  std::optional<StateSpaceModel> model;
  StateSpaceModel reference;
  std::optional<VerificationResult> verification;
  std::optional<VerificationResult> same_data_verification;
  std::string failed_stage;
  std::string error;
  PipelineConfig config;

  [[nodiscard]] bool ok() const noexcept { return failed_stage.empty(); }
};

/// Independent RNG stream for (seed, stream): states use streams 0 and 1,
/// the training and validation simulations use the two below.
[[nodiscard]] std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) noexcept;
inline constexpr std::uint64_t kTrainingSimStream = 100;
inline constexpr std::uint64_t kValidationSimStream = 101;

/// The trajectories full_pipeline trains and verifies on.
[[nodiscard]] Trajectory training_trajectory(const PipelineConfig& cfg);
[[nodiscard]] Trajectory validation_trajectory(const PipelineConfig& cfg);

/// simulate -> datasets -> identify both states -> assemble -> verify.
/// Config errors throw before anything runs; later stage failures are
/// recorded in the report together with the partial results.
[[nodiscard]] IdentificationReport full_pipeline(const PipelineConfig& cfg);

[[nodiscard]] nlohmann::json state_space_to_json(const StateSpaceModel& m);
[[nodiscard]] StateSpaceModel state_space_from_json(const nlohmann::json& doc);
[[nodiscard]] nlohmann::json verification_to_json(const VerificationResult& v);
[[nodiscard]] nlohmann::json train_report_to_json(const TrainReport& r);
[[nodiscard]] nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg);
[[nodiscard]] nlohmann::json report_to_json(const IdentificationReport& report);
[[nodiscard]] nlohmann::json deltas_to_json(const std::vector<ModelDelta>& deltas);

}  // namespace kansid
