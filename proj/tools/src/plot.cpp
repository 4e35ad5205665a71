#include "plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "io.hpp"
#include "kansid/error.hpp"

namespace kansid::cli {
namespace {

constexpr double kLeft = 80.0;
constexpr double kRight = 24.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 56.0;
constexpr std::size_t kMaxPoints = 2000;
constexpr const char* kColors[] = {"#1f77b4", "#d62728"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  if (std::abs(v) < 1e-12) v = 0.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string default_title(PlotKind kind) {
  switch (kind) {
    case PlotKind::kTrajectory: return "Training trajectory";
    case PlotKind::kDerivativeFit: return "Finite-difference target vs network";
    case PlotKind::kVerification: return "Output voltage: plant vs identified model";
  }
  return {};
}

}  // namespace

std::string_view plot_kind_name(PlotKind k) noexcept {
  switch (k) {
    case PlotKind::kTrajectory: return "trajectory";
    case PlotKind::kDerivativeFit: return "derivative_fit";
    case PlotKind::kVerification: return "verification";
  }
  return "trajectory";
}

PlotKind plot_kind_from_name(std::string_view name) {
  if (name == "trajectory") return PlotKind::kTrajectory;
  if (name == "derivative_fit") return PlotKind::kDerivativeFit;
  if (name == "verification") return PlotKind::kVerification;
  throw InvalidArgument("unknown plot kind '" + std::string(name) + "'");
}

std::vector<double> nice_ticks(double lo, double hi, int target) {
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / std::max(1, target - 1);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> ticks;
  const double first = std::ceil(lo / step - 1e-9) * step;
  for (double t = first; t <= hi + step * 1e-9; t += step) ticks.push_back(t);
  return ticks;
}

std::string render_svg(PlotKind kind, const PlotData& data) {
  if (data.series.empty() || data.x.empty()) throw InvalidArgument("plot needs at least one non-empty series");
  if (data.series.size() > 2) throw InvalidArgument("plot takes at most two series");
  for (const auto& s : data.series) {
    if (s.y.size() != data.x.size()) {
      throw InvalidArgument("series '" + s.label + "' has " + std::to_string(s.y.size()) + " points, expected " +
                            std::to_string(data.x.size()));
    }
  }

  double x_lo = *std::min_element(data.x.begin(), data.x.end());
  double x_hi = *std::max_element(data.x.begin(), data.x.end());
  double y_lo = data.series[0].y[0];
  double y_hi = y_lo;
  for (const auto& s : data.series) {
    for (double v : s.y) {
      if (!std::isfinite(v)) throw InvalidArgument("series '" + s.label + "' contains a non-finite value");
      y_lo = std::min(y_lo, v);
      y_hi = std::max(y_hi, v);
    }
  }
  if (x_hi == x_lo) {
    x_lo -= 0.5;
    x_hi += 0.5;
  }
  if (y_hi == y_lo) {
    const double pad = y_lo == 0.0 ? 1.0 : std::abs(y_lo) * 0.05;
    y_lo -= pad;
    y_hi += pad;
  } else {
    const double pad = 0.05 * (y_hi - y_lo);
    y_lo -= pad;
    y_hi += pad;
  }

  const double plot_w = kCanvasWidth - kLeft - kRight;
  const double plot_h = kCanvasHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * plot_w; };
  auto py = [&](double y) { return kTop + (y_hi - y) / (y_hi - y_lo) * plot_h; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"960\" height=\"480\" viewBox=\"0 0 960 480\" "
         "font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"960\" height=\"480\" fill=\"white\"/>\n";
  svg += "<text x=\"480\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
         escape(data.title.empty() ? default_title(kind) : data.title) + "</text>\n";

  // axes
  svg += "<g stroke=\"black\" stroke-width=\"1\">\n";
  svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop + plot_h) + "\" x2=\"" + num(kLeft + plot_w) + "\" y2=\"" +
         num(kTop + plot_h) + "\"/>\n";
  svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) + "\" y2=\"" +
         num(kTop + plot_h) + "\"/>\n";
  svg += "</g>\n";

  svg += "<g class=\"xticks\">\n";
  for (double t : nice_ticks(x_lo, x_hi)) {
    const double x = px(t);
    svg += "<line x1=\"" + num(x) + "\" y1=\"" + num(kTop + plot_h) + "\" x2=\"" + num(x) + "\" y2=\"" +
           num(kTop + plot_h + 5) + "\" stroke=\"black\"/>";
    svg += "<text x=\"" + num(x) + "\" y=\"" + num(kTop + plot_h + 19) + "\" text-anchor=\"middle\">" + tick_label(t) +
           "</text>\n";
  }
  svg += "</g>\n<g class=\"yticks\">\n";
  for (double t : nice_ticks(y_lo, y_hi)) {
    const double y = py(t);
    svg += "<line x1=\"" + num(kLeft - 5) + "\" y1=\"" + num(y) + "\" x2=\"" + num(kLeft) + "\" y2=\"" + num(y) +
           "\" stroke=\"black\"/>";
    svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(y) + "\" x2=\"" + num(kLeft + plot_w) + "\" y2=\"" + num(y) +
           "\" stroke=\"#e0e0e0\"/>";
    svg += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" + tick_label(t) +
           "</text>\n";
  }
  svg += "</g>\n";
  svg += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"" + num(kCanvasHeight - 12) +
         "\" text-anchor=\"middle\">" + escape(data.x_label) + "</text>\n";
  svg += "<text x=\"16\" y=\"" + num(kTop + plot_h / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         num(kTop + plot_h / 2) + ")\">" + escape(data.y_label) + "</text>\n";

  const std::size_t n = data.x.size();
  const std::size_t stride = n > kMaxPoints ? (n + kMaxPoints - 1) / kMaxPoints : 1;
  for (std::size_t s = 0; s < data.series.size(); ++s) {
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(kColors[s]) + "\" stroke-width=\"1.5\"" +
           (s == 1 ? " stroke-dasharray=\"6 3\"" : "") + " points=\"";
    for (std::size_t i = 0; i < n; i += stride) {
      svg += num(px(data.x[i])) + "," + num(py(data.series[s].y[i])) + " ";
    }
    if ((n - 1) % stride != 0) svg += num(px(data.x[n - 1])) + "," + num(py(data.series[s].y[n - 1]));
    if (svg.back() == ' ') svg.pop_back();
    svg += "\"/>\n";
  }

  // legend, top right
  svg += "<g class=\"legend\">\n";
  for (std::size_t s = 0; s < data.series.size(); ++s) {
    const double y = kTop + 14 + 18.0 * static_cast<double>(s);
    const double x = kLeft + plot_w - 190;
    svg += "<line x1=\"" + num(x) + "\" y1=\"" + num(y) + "\" x2=\"" + num(x + 28) + "\" y2=\"" + num(y) +
           "\" stroke=\"" + kColors[s] + "\" stroke-width=\"2\"" + (s == 1 ? " stroke-dasharray=\"6 3\"" : "") +
           "/>";
    svg += "<text x=\"" + num(x + 34) + "\" y=\"" + num(y + 4) + "\">" + escape(data.series[s].label) + "</text>\n";
  }
  svg += "</g>\n";
  if (data.rmse) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "RMSE = %.6g", *data.rmse);
    svg += "<text class=\"rmse\" x=\"" + num(kLeft + 10) + "\" y=\"" + num(kTop + 16) + "\">" + buf + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void emit_plot(PlotKind kind, const PlotData& data, const std::filesystem::path& path) {
  write_file_atomic(path, render_svg(kind, data));
}

}  // namespace kansid::cli
