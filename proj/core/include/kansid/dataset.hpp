#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kansid {

/// Sampled converter trajectory. Row k is taken at time k * ts_seconds; the
/// duty column holds the duty cycle in effect at that instant.
struct Trajectory {
  double ts_seconds = 0.0;
  std::vector<double> time;
  std::vector<double> i_l;
  std::vector<double> v_c;
  std::vector<double> v_out;
  std::vector<double> duty;
  std::vector<double> v_in;

  [[nodiscard]] std::size_t rows() const noexcept { return time.size(); }
  /// Checks column lengths, uniform time spacing (1e-9 s) and duty range.
  void validate() const;
};

/// CSV with header `t,i_L,v_C,v_out,duty,v_in`, full-precision decimals.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
/// Columns may appear in any order; a missing column raises ParseError naming
/// it. ts_seconds is inferred from the time column and cross-checked.
[[nodiscard]] Trajectory read_trajectory_csv(std::istream& is);

enum class DiffMode {
  kLiteral,    ///< first/last one-sided, interior x[k+1]-x[k-1]
  kConsistent  ///< interior halved so every entry approximates ts * dx/dt
};

[[nodiscard]] std::string_view diff_mode_name(DiffMode m) noexcept;
[[nodiscard]] DiffMode diff_mode_from_name(std::string_view name);

/// Finite differences without division by the sample period.
[[nodiscard]] std::vector<double> finite_diff(std::span<const double> series, DiffMode mode);

/// Supervised rows g_k = [i_L, v_C, D] with one state's difference target.
struct SidDataset {
  std::vector<std::string> input_labels;
  std::vector<double> inputs;  ///< row-major, rows() x cols()
  std::vector<double> targets;
  DiffMode diff_mode = DiffMode::kConsistent;
  std::size_t stride = 1;
  std::string state_label;
  double ts_seconds = 0.0;

  [[nodiscard]] std::size_t cols() const noexcept { return input_labels.size(); }
  [[nodiscard]] std::size_t rows() const noexcept { return targets.size(); }
  [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept {
    return std::span<const double>(inputs).subspan(r * cols(), cols());
  }
  [[nodiscard]] std::vector<double> column(std::size_t c) const;
};

inline constexpr std::string_view kStateIL = "i_L";
inline constexpr std::string_view kStateVC = "v_C";
inline constexpr std::string_view kInputDuty = "D";

/// Dataset for `target_state` (i_L or v_C). Targets are differenced at full
/// rate, then rows 0, stride, 2*stride, ... are kept. With `exclude_vin`
/// the input-voltage column must be constant (it is not part of g).
[[nodiscard]] SidDataset build_dataset(const Trajectory& traj, std::string_view target_state, DiffMode mode,
                                       std::size_t stride, bool exclude_vin = true);

/// Exact per-column (min, max).
[[nodiscard]] std::vector<std::pair<double, double>> input_ranges(const SidDataset& ds);

}  // namespace kansid
