#pragma once

// Reader and writer for the TOML subset used by experiment files: tables,
// dotted table headers, bare keys, strings, booleans, integers, floats and
// (nested, possibly multi-line) arrays. Values land in a JSON document so the
// JSON and TOML front ends share one decoder.

#include <string>

#include "json.hpp"

namespace tvcov::toml_lite {

/// Throws ConfigError with the offending line number.
nlohmann::json parse(const std::string& text);

/// Top-level object to TOML. Nested objects become tables; arrays must not
/// contain objects.
std::string dump(const nlohmann::json& doc);

}  // namespace tvcov::toml_lite
