#include "engage/pipeline.hpp"

#include "engage/error.hpp"

namespace engage {

SolvedPolicy solve_dynamic_policy(const NthSystemParams& params, const LadderOptions& ladder_options,
                                  const SolverOptions& solver_options) {
    SolvedPolicy out;
    out.limit = scale_to_limit(params);
    const double mu = out.limit.classes.front().mu;
    for (const auto& c : out.limit.classes) {
        if (c.mu != mu) {
            throw ConfigError("queue thresholds need a common service rate across classes");
        }
    }
    out.ladder = derive_ladder(out.limit, ladder_options);
    out.solution = solve_beta_star(out.ladder, solver_options);
    out.rung_thresholds = workload_thresholds(out.solution, out.limit.n, mu);
    out.policy.ladder_order = out.ladder.activity_order;
    out.policy.queue_thresholds.assign(out.ladder.rungs(), 0.0);
    for (std::size_t r = 0; r < out.ladder.rungs(); ++r) {
        out.policy.queue_thresholds[out.ladder.activity_order[r]] = out.rung_thresholds[r];
    }
    return out;
}

}  // namespace engage
