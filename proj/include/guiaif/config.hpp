#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "guiaif/harness.hpp"
#include <json.hpp>

namespace guiaif {

/// Parses a run configuration document. Every field has a default; unknown
/// keys, wrong types and out-of-range values raise ConfigError with the line
/// of the offending text where it can be located.
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Full configuration with every default filled in. parse_run_config() of the
/// dumped document reproduces the same configuration.
nlohmann::json to_json(const RunConfig& cfg);
nlohmann::json to_json(const TaskSpec& task);

}  // namespace guiaif
