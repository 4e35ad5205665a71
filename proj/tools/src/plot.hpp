#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kansid::cli {

enum class PlotKind { kTrajectory, kDerivativeFit, kVerification };

[[nodiscard]] std::string_view plot_kind_name(PlotKind k) noexcept;
[[nodiscard]] PlotKind plot_kind_from_name(std::string_view name);

struct Series {
  std::string label;
  std::vector<double> y;
};

struct PlotData {
  std::vector<double> x;
  std::vector<Series> series;  ///< one or two
  std::string title;           ///< empty: a per-kind default
  std::string x_label = "t [s]";
  std::string y_label;
  std::optional<double> rmse;  ///< printed with %.6g when set
};

inline constexpr int kCanvasWidth = 960;
inline constexpr int kCanvasHeight = 480;

/// Line plot on a fixed 960x480 canvas. Output depends only on the inputs.
[[nodiscard]] std::string render_svg(PlotKind kind, const PlotData& data);
void emit_plot(PlotKind kind, const PlotData& data, const std::filesystem::path& path);

/// Roughly `target` evenly spaced round tick values covering [lo, hi].
[[nodiscard]] std::vector<double> nice_ticks(double lo, double hi, int target = 6);

}  // namespace kansid::cli
