#pragma once

// JSON experiment configuration. Parsing rejects unknown keys and wrong types
// with the JSON pointer of the offending value; emitting materializes every
// default so the echoed file fully describes the run.

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "algopricing/harness.hpp"

namespace algopricing {

// Throws ConfigError("<pointer>: <problem>").
ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

// Parses text; syntax errors become ConfigError with the byte offset.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string emit_config(const ExperimentConfig& cfg);

const char* to_string(AgentKind kind);
const char* to_string(Environment::Kind kind);
const char* to_string(ForcedAction::Kind kind);

} // namespace algopricing
