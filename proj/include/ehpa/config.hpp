#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "ehpa/models.hpp"

namespace ehpa {

/// A scenario plus the planner's grid settings, as read from a config file.
struct RunConfig {
    Scenario scenario;
    double delta = 0.1;
    double alpha = 1e-4;
    std::optional<std::size_t> max_iters;
};

/// Flat `key = value` lines, '#' starts a comment. Unknown or repeated keys
/// and malformed values throw ConfigError. See README for the key list.
RunConfig parse_config(std::istream& in, const std::string& source = "config");
RunConfig load_config(const std::string& path);

/// Builds a RunConfig from already-split key/value pairs (used by presets).
RunConfig config_from_map(const std::map<std::string, std::string>& kv, const std::string& source = "config");

}  // namespace ehpa
