#include "kansid/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "kansid/error.hpp"

namespace kansid {

namespace {

constexpr std::array<std::string_view, 6> kCsvColumns = {"t", "i_L", "v_C", "v_out", "duty", "v_in"};
constexpr double kTimeTolerance = 1e-9;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t start = 0;
    while (start < cell.size() && cell[start] == ' ') ++start;
    out.push_back(cell.substr(start));
  }
  return out;
}

double parse_real(const std::string& s, std::size_t line_no, std::string_view column) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError("trajectory CSV line " + std::to_string(line_no) + ": column '" + std::string(column) +
                     "' is not a number: '" + s + "'");
  }
  return v;
}

}  // namespace

void Trajectory::validate() const {
  const std::size_t n = time.size();
  if (i_l.size() != n || v_c.size() != n || v_out.size() != n || duty.size() != n || v_in.size() != n) {
    throw InvalidArgument("trajectory columns have different lengths");
  }
  if (!(ts_seconds > 0.0)) throw InvalidArgument("trajectory sample period must be positive");
  for (std::size_t k = 1; k < n; ++k) {
    const double dt = time[k] - time[k - 1];
    if (!(dt > 0.0)) throw InvalidArgument("trajectory time column is not strictly increasing at row " + std::to_string(k));
    if (std::abs(dt - ts_seconds) > kTimeTolerance) {
      throw InvalidArgument("trajectory time column is not uniformly spaced at row " + std::to_string(k));
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!(duty[k] >= 0.0 && duty[k] <= 1.0)) {
      throw InvalidArgument("duty outside [0, 1] at row " + std::to_string(k));
    }
  }
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,i_L,v_C,v_out,duty,v_in\n";
  char buf[256];
  for (std::size_t k = 0; k < traj.rows(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", traj.time[k], traj.i_l[k], traj.v_c[k],
                  traj.v_out[k], traj.duty[k], traj.v_in[k]);
    os << buf;
  }
}

Trajectory read_trajectory_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("trajectory CSV is empty");
  const std::vector<std::string> header = split_csv_line(line);
  std::array<std::size_t, kCsvColumns.size()> index{};
  for (std::size_t c = 0; c < kCsvColumns.size(); ++c) {
    auto it = std::find(header.begin(), header.end(), kCsvColumns[c]);
    if (it == header.end()) {
      throw ParseError("trajectory CSV is missing column '" + std::string(kCsvColumns[c]) + "'");
    }
    index[c] = static_cast<std::size_t>(it - header.begin());
  }

  Trajectory traj;
  std::array<std::vector<double>*, kCsvColumns.size()> cols = {&traj.time, &traj.i_l,  &traj.v_c,
                                                               &traj.v_out, &traj.duty, &traj.v_in};
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ParseError("trajectory CSV line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                       " cells, expected " + std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < kCsvColumns.size(); ++c) {
      cols[c]->push_back(parse_real(cells[index[c]], line_no, kCsvColumns[c]));
    }
  }
  if (traj.rows() < 2) throw ParseError("trajectory CSV needs at least two rows");
  traj.ts_seconds = (traj.time.back() - traj.time.front()) / static_cast<double>(traj.rows() - 1);
  try {
    traj.validate();
  } catch (const InvalidArgument& err) {
    throw ParseError(std::string("trajectory CSV: ") + err.what());
  }
  return traj;
}

std::string_view diff_mode_name(DiffMode m) noexcept { return m == DiffMode::kLiteral ? "literal" : "consistent"; }

DiffMode diff_mode_from_name(std::string_view name) {
  if (name == "literal") return DiffMode::kLiteral;
  if (name == "consistent") return DiffMode::kConsistent;
  throw InvalidArgument("unknown diff mode '" + std::string(name) + "' (expected literal|consistent)");
}

std::vector<double> finite_diff(std::span<const double> series, DiffMode mode) {
  const std::size_t n = series.size();
  if (n < 2) throw InvalidArgument("finite differences need at least two samples");
  std::vector<double> out(n);
  out.front() = series[1] - series[0];
  out.back() = series[n - 1] - series[n - 2];
  const double scale = mode == DiffMode::kConsistent ? 0.5 : 1.0;
  for (std::size_t k = 1; k + 1 < n; ++k) out[k] = scale * (series[k + 1] - series[k - 1]);
  return out;
}

std::vector<double> SidDataset::column(std::size_t c) const {
  std::vector<double> out(rows());
  for (std::size_t r = 0; r < rows(); ++r) out[r] = inputs[r * cols() + c];
  return out;
}

SidDataset build_dataset(const Trajectory& traj, std::string_view target_state, DiffMode mode, std::size_t stride,
                         bool exclude_vin) {
  if (stride < 1) throw InvalidArgument("dataset stride must be >= 1");
  const std::vector<double>* state = nullptr;
  if (target_state == kStateIL) {
    state = &traj.i_l;
  } else if (target_state == kStateVC) {
    state = &traj.v_c;
  } else {
    throw InvalidArgument("unknown state label '" + std::string(target_state) + "' (expected i_L or v_C)");
  }
  traj.validate();
  if (exclude_vin && !traj.v_in.empty()) {
    const auto [lo, hi] = std::minmax_element(traj.v_in.begin(), traj.v_in.end());
    if (*hi - *lo > 1e-9 * std::max(1.0, std::abs(*hi))) {
      throw InvalidArgument("input voltage varies along the trajectory; it cannot be excluded from the inputs");
    }
  }

  const std::vector<double> diffs = finite_diff(*state, mode);
  SidDataset ds;
  ds.input_labels = {std::string(kStateIL), std::string(kStateVC), std::string(kInputDuty)};
  ds.diff_mode = mode;
  ds.stride = stride;
  ds.state_label = std::string(target_state);
  ds.ts_seconds = traj.ts_seconds;
  const std::size_t n = traj.rows();
  const std::size_t kept = (n + stride - 1) / stride;
  ds.inputs.reserve(kept * 3);
  ds.targets.reserve(kept);
  for (std::size_t k = 0; k < n; k += stride) {
    ds.inputs.push_back(traj.i_l[k]);
    ds.inputs.push_back(traj.v_c[k]);
    ds.inputs.push_back(traj.duty[k]);
    if (!std::isfinite(diffs[k])) throw InvalidArgument("non-finite difference target at row " + std::to_string(k));
    ds.targets.push_back(diffs[k]);
  }
  return ds;
}

std::vector<std::pair<double, double>> input_ranges(const SidDataset& ds) {
  if (ds.rows() == 0 || ds.cols() == 0) throw InvalidArgument("input ranges of an empty dataset");
  std::vector<std::pair<double, double>> ranges(ds.cols(), {0.0, 0.0});
  for (std::size_t c = 0; c < ds.cols(); ++c) ranges[c] = {ds.inputs[c], ds.inputs[c]};
  for (std::size_t r = 1; r < ds.rows(); ++r) {
    for (std::size_t c = 0; c < ds.cols(); ++c) {
      const double v = ds.inputs[r * ds.cols() + c];
      ranges[c].first = std::min(ranges[c].first, v);
      ranges[c].second = std::max(ranges[c].second, v);
    }
  }
  return ranges;
}

}  // namespace kansid
