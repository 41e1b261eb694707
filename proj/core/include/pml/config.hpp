#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pml/scaling.hpp"

namespace pml {

/// Built-in defaults as JSON text.  Every accepted key appears here.
std::string default_config_json();

/// Resolved configuration: defaults, then the file (".toml" or ".json"),
/// then "key=value" overrides with dotted keys (e.g. "solver.backend=entropic").
/// Unknown keys and type mismatches throw InvalidArgument.  Returns JSON text.
std::string resolve_config(const std::optional<std::string>& path,
                           const std::vector<std::string>& overrides = {});

/// Parses config text in the given format ("toml" or "json") into JSON text.
std::string config_text_to_json(const std::string& text, const std::string& format);

ExperimentConfig experiment_from_json(const std::string& json_text);
std::string experiment_to_json(const ExperimentConfig& config);

}  // namespace pml
