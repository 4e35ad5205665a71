#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "kansid/dataset.hpp"

namespace kansid::cli {

/// Writes to a sibling temp file and renames it over `path`, so readers never
/// see a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

[[nodiscard]] std::string read_file(const std::filesystem::path& path);
[[nodiscard]] nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

[[nodiscard]] Trajectory read_trajectory(const std::filesystem::path& path);
void write_trajectory(const std::filesystem::path& path, const Trajectory& traj);

}  // namespace kansid::cli
