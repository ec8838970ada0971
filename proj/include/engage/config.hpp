#pragma once

#include "engage/bellman.hpp"
#include "engage/params.hpp"
#include "engage/simulator.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace engage {

struct ExperimentOptions {
    std::vector<double> gammas_per_day = {0.005, 0.010, 0.015, 0.020, 0.025};
    std::vector<double> theta0_grid = {-1.4, -1.8, -2.3, -2.8, -3.4};
    int tune_replications = 10;
    std::uint64_t tune_seed = 7;
    int switch_day = 100 * kDaysPerQuarter;
    int transition_replications = 50;
    int transition_horizon_years = 50;
};

struct RunConfig {
    NthSystemParams params;
    SimConfig sim;  // sim.params mirrors params
    LadderOptions ladder;
    SolverOptions solver;
    ExperimentOptions experiment;

    std::string source_path;
    std::string hash;  // SHA-256 of the source text, hex
};

/// Sections: classes, activities, simulation, solver, experiment. Unknown
/// keys are errors; every physical quantity carries its unit in the key.
/// Throws ConfigError as "<source>:<line>: <message>".
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& source_name = "<string>");

/// Full-precision YAML; parse_config_text(serialize_config(c)) reproduces c.
std::string serialize_config(const RunConfig& config);

std::string sha256_hex(const std::string& data);

}  // namespace engage
