#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "bellman/estimation.hpp"

namespace bellman {

struct SimulationSettings {
    int n = 0;
    std::uint64_t seed = 0;
    Vector x0_true;
};

struct EstimationSettings {
    std::vector<ParamSpec> params;
    OptimizerSettings optimizer;
};

/// Parsed and validated run configuration ("version": 1 schema). Unknown
/// keys anywhere in the document are rejected.
struct RunConfig {
    ModelSpec model;
    FilterConfig filter;
    std::optional<EstimationSettings> estimation;
    std::optional<SimulationSettings> simulation;
};

RunConfig parse_config(const std::string& json_text);  // throws ConfigError
RunConfig load_config(const std::string& path);        // adds IoError for unreadable files

}  // namespace bellman
