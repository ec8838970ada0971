#pragma once

#include "engage/bellman.hpp"
#include "engage/params.hpp"
#include "engage/simulator.hpp"

namespace engage {

/// params -> limit -> ladder -> Bellman solution -> queue thresholds.
struct SolvedPolicy {
    LimitParams limit;
    DriftLadder ladder;
    BellmanSolution solution;
    std::vector<double> rung_thresholds;  // q*_1 > ... > q*_L, ladder order
    DynamicPolicy policy;                 // thresholds in activity order
};

SolvedPolicy solve_dynamic_policy(const NthSystemParams& params, const LadderOptions& ladder_options = {},
                                  const SolverOptions& solver_options = {});

}  // namespace engage
