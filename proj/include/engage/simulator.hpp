#pragma once

#include "engage/params.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace engage {

inline constexpr int kDaysPerQuarter = 91;

struct FixedSlots {
    int count = 250;
};
/// a1, a2, a3 with probabilities 0.25 / 0.5 / 0.25.
struct Discrete3Slots {
    int a1 = 0;
    int a2 = 0;
    int a3 = 0;
};
using SlotsModel = std::variant<FixedSlots, Discrete3Slots>;

/// Time to abandon ~ Exp(gamma_j) days.
struct ExponentialAbandon {};
/// Time to abandon ~ Gamma(shape, rate) days; rate defaults to shape x gamma_j
/// so the mean stays 1/gamma_j.
struct GammaAbandon {
    double shape = 1.0;
    std::optional<double> rate_per_day;
};
using AbandonModel = std::variant<ExponentialAbandon, GammaAbandon>;

enum class ArrivalDays { Calendar, Working };
enum class ServiceDiscipline { Fcfs, PenaltyFunction };
/// Raw: class rates as calibrated. Balanced: base rates scaled by 1/rho so the
/// simulated system meets the load condition the policy was derived under.
enum class BaseRates { Raw, Balanced };

struct SimConfig {
    NthSystemParams params;
    int horizon_years = 25;
    int warmup_years = 20;
    int measure_years = 5;
    int replications = 20;
    std::uint64_t seed = 1;
    SlotsModel slots = FixedSlots{250};
    AbandonModel abandon = ExponentialAbandon{};
    bool crn = true;
    ArrivalDays arrival_days = ArrivalDays::Calendar;
    ServiceDiscipline discipline = ServiceDiscipline::Fcfs;
    /// Repeat-class sign-ups scaled by (k_j - Q_j) / k_j.
    bool thinning = true;
    BaseRates base_rates = BaseRates::Balanced;
    bool quarterly = false;
    unsigned threads = 0;  // 0: hardware concurrency

    [[nodiscard]] int horizon_days() const { return horizon_years * kDaysPerYear; }
};

/// Throws SimulationError on an inconsistent configuration.
void validate_sim_config(const SimConfig& config);

struct StaticPolicy {
    std::vector<std::size_t> active;  // 0-based activity indices
};
struct DynamicPolicy {
    std::vector<double> queue_thresholds;  // per activity, input order
    std::vector<std::size_t> ladder_order;  // activity index on rung 1, 2, ...
};
struct SwitchPolicy;
using Policy = std::variant<StaticPolicy, DynamicPolicy, SwitchPolicy>;
struct SwitchPolicy {
    std::shared_ptr<const Policy> first;
    std::shared_ptr<const Policy> second;
    int switch_day = 0;
};

void validate_policy(const Policy& policy, std::size_t activities, int horizon_days);
std::string describe_policy(const Policy& policy);

/// Opportunity days within one 364-day year (0-based).
std::vector<int> schedule_for(const EngagementActivity& activity, int working_days_per_week);

/// Extra expected sign-ups per day for each class while the activity is on,
/// for an activation that lasts gap_days. Zero everywhere when inactive.
std::vector<double> apply_boost(const std::vector<VolunteerClass>& classes, const EngagementActivity& activity,
                                bool active, int gap_days);

struct QuarterStats {
    double mean_queue = 0.0;
    double abandon_pct = 0.0;
    double activity_cost = 0.0;
};

struct SimMetrics {
    double activity_cost = 0.0;  // $/year
    double idle_cost = 0.0;      // $/year
    double total_cost = 0.0;     // $/year
    double idle_pct = 0.0;
    double abandon_pct = 0.0;
    std::vector<double> activity_usage_pct;
    double mean_queue_length = 0.0;
    std::vector<QuarterStats> quarters;

    // Whole-run counts, for flow conservation.
    std::uint64_t arrivals = 0;
    std::uint64_t served = 0;
    std::uint64_t abandoned = 0;
    std::uint64_t final_queue = 0;
    // Measure-window counts.
    std::uint64_t window_arrivals = 0;
    std::uint64_t window_abandoned = 0;
    std::uint64_t window_unfilled = 0;
    std::uint64_t window_slots = 0;
    std::vector<std::uint64_t> window_activations;
    std::vector<std::uint64_t> window_opportunities;
};

SimMetrics run_replication(const SimConfig& config, const Policy& policy, int rep_index,
                           std::uint64_t stream_salt = 0);

struct Estimate {
    double mean = 0.0;
    double half_width = 0.0;  // 95% Student-t
};
Estimate estimate(const std::vector<double>& samples);

struct PolicySummary {
    std::string name;
    Policy policy;
    Estimate activity_cost;
    Estimate idle_cost;
    Estimate total_cost;
    Estimate idle_pct;
    Estimate abandon_pct;
    Estimate mean_queue_length;
    std::vector<Estimate> activity_usage_pct;
    std::vector<SimMetrics> replications;
};

struct NamedPolicy {
    std::string name;
    Policy policy;
};

struct ExperimentReport {
    std::vector<PolicySummary> policies;
    std::optional<std::size_t> best_static;  // index into policies
    std::optional<std::size_t> dynamic;
    /// 100 (best static - dynamic) / best static, when both are present.
    std::optional<double> improvement_pct;
    std::optional<Estimate> paired_saving;  // best static - dynamic, per replication
};

ExperimentReport run_experiment(const SimConfig& config, const std::vector<NamedPolicy>& policies);

/// All 2^L static subsets; best_static flags the cheapest.
ExperimentReport enumerate_static(const SimConfig& config);

std::string subset_name(const std::vector<std::size_t>& active);

using PolicyHook = std::function<Policy(const NthSystemParams&)>;

struct SweepRow {
    double gamma = 0.0;
    std::string best_static;
    double best_static_total = 0.0;
    double dynamic_total = 0.0;
    double improvement_pct = 0.0;
    ExperimentReport report;  // best static + dynamic
};

/// For each gamma: set every class's abandonment rate, rebuild the dynamic
/// policy via the hook, enumerate statics and compare.
std::vector<SweepRow> sweep_gamma(const SimConfig& config, const std::vector<double>& gammas,
                                  const PolicyHook& dynamic_for);

struct TuneRow {
    double theta0 = 0.0;
    Estimate total_cost;
    std::optional<std::string> error;
};
struct TuneResult {
    double best_theta0 = 0.0;
    std::vector<TuneRow> grid;
};
TuneResult tune_theta0(const SimConfig& config, const std::vector<double>& theta0_grid,
                       const std::function<Policy(double theta0)>& dynamic_for);

struct TransitionSeries {
    std::vector<QuarterStats> mean;       // per quarter, averaged over replications
    std::vector<std::vector<QuarterStats>> per_rep;
};
struct TransitionResult {
    TransitionSeries sim_a;
    TransitionSeries sim_b;
    int switch_quarter = 0;  // 0-based index of the first dynamic quarter in Sim B
};

/// Sim A: dynamic throughout. Sim B: static until switch_day, dynamic after.
TransitionResult transition_experiment(const SimConfig& config, const Policy& static_policy,
                                       const Policy& dynamic_policy, int switch_day);

}  // namespace engage
