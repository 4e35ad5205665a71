#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "kansid/pipeline.hpp"

namespace kansid::cli {

struct CliConfig {
  PipelineConfig pipeline;
  /// Relative change at which `compare` flags an entry.
  double compare_threshold = 0.05;
  bool plot_trajectory = false;
  bool plot_derivative_fit = false;
  bool plot_verification = false;
  /// Where plots go; empty means next to the --out file.
  std::string plot_dir;
};

struct ConfigKey {
  std::string key;
  std::string help;
  std::function<std::string(const CliConfig&)> get;
  std::function<void(CliConfig&, std::string_view)> set;
};

/// Every accepted dotted key, in documentation order.
[[nodiscard]] const std::vector<ConfigKey>& config_keys();

/// Applies one `key = value` assignment; unknown keys and malformed values
/// throw InvalidArgument naming the key.
void apply_setting(CliConfig& cfg, std::string_view key, std::string_view value);
/// `key=value` as given to --set.
void apply_assignment(CliConfig& cfg, std::string_view assignment);

/// Parses a config file: one `key = value` per line, `#` starts a comment.
void apply_config_text(CliConfig& cfg, std::string_view text, std::string_view origin = "config");
/// "default" selects the built-in defaults; anything else is a file path.
[[nodiscard]] CliConfig load_config(const std::string& source);

/// Key table with current defaults, for --help.
[[nodiscard]] std::string describe_keys();

// Value syntax shared with the key table.
[[nodiscard]] std::string format_profile(const ReferenceProfile& p);
[[nodiscard]] ReferenceProfile parse_profile(std::string_view text);

}  // namespace kansid::cli
