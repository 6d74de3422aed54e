#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace mott {

/// The single table of defaults; every accepted config key appears here.
nlohmann::json default_config();

/// Keys that steer execution but never change results; kept out of the hash.
const std::vector<std::string>& execution_keys();

/// Defaults, then the config file, then flag overrides (JSON literals or bare
/// strings). Unknown keys and type mismatches throw config_error.
nlohmann::json resolve_config(const nlohmann::json& file, const std::map<std::string, std::string>& overrides);

/// Throws config_error naming the violated constraint.
void validate_config(const std::string& command, const nlohmann::json& config);

/// SHA-256 (hex) of the command and the result-relevant part of the config.
std::string config_hash(const std::string& command, const nlohmann::json& config);

std::string sha256_hex(const std::string& bytes);

const std::vector<std::string>& commands();

/// Artifacts of one command, file name to contents.
using Artifacts = std::map<std::string, std::string>;

Artifacts run_command(const std::string& command, const nlohmann::json& config);

/// Exit codes: 0 success, 1 numeric failure, 2 configuration or usage error,
/// 3 output directory already present without --force.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace mott
