#pragma once

#include "engage/config.hpp"
#include "engage/pipeline.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace engage {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitSolver = 3,
    kExitSimulation = 4,
};

/// "static:1,2,3" (1-based, may be empty), "dynamic", or "switch:1,2,3@<day>"
/// (static until the day, dynamic after). Throws ConfigError.
NamedPolicy parse_policy_spec(const std::string& spec, const RunConfig& config);

/// Dynamic policy from the config's ladder and solver settings.
SolvedPolicy solve_from_config(const RunConfig& config);

/// theta0 grid search on the experiment's tuning seed and replication count.
TuneResult tune_from_config(const RunConfig& config);

/// Writes through a sibling temp file and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

std::string thresholds_csv(const RunConfig& config, const SolvedPolicy& solved);
std::string report_csv(const RunConfig& config, const ExperimentReport& report);
std::string sweep_csv(const RunConfig& config, const std::vector<SweepRow>& rows,
                      const std::vector<double>& theta0_used);
std::string tune_csv(const RunConfig& config, const TuneResult& result);
std::string transition_csv(const RunConfig& config, const TransitionSeries& series, int replications);

/// Entry point of engagectl; returns the process exit code.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace engage
