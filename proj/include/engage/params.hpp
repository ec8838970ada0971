#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace engage {

/// Calendar used throughout: 52 weeks of 7 days; service on working days only.
inline constexpr int kWeeksPerYear = 52;
inline constexpr int kDaysPerWeek = 7;
inline constexpr int kDaysPerYear = kWeeksPerYear * kDaysPerWeek;  // 364

enum class VolunteerKind { Repeat, OneTime };

/// One volunteer class of the n-th (unscaled) system.
///
/// Repeat classes carry a population and a per-volunteer repose exit rate;
/// one-time classes carry an external arrival rate. Rates are per year
/// except the abandonment hazard, which is per day.
struct VolunteerClass {
    std::string name;
    VolunteerKind kind = VolunteerKind::Repeat;
    double population = 0.0;        // k_j^n (Repeat)
    double repose_exit_rate = 0.0;  // r_j^n, 1/year per volunteer (Repeat)
    double arrival_rate = 0.0;      // lambda_j^n, arrivals/year (OneTime)
    double abandonment_rate = 0.0;  // gamma_j, 1/day
    double service_rate = 0.0;      // mu_j^n, slots/year
    double mix_weight = 0.0;        // x_j

    /// Sign-ups per year at the base rate: r k for repeat, lambda for one-time.
    [[nodiscard]] double annual_arrivals() const;
};

/// Rate increase an activity grants one class while it is active. For a
/// repeat class this is a repose-exit boost per volunteer (1/year); for a
/// one-time class an arrival-rate boost (arrivals/year).
struct ClassBoost {
    std::size_t class_index = 0;
    double rate = 0.0;
};

struct EngagementActivity {
    std::string name;
    std::vector<ClassBoost> boosts;
    double fixed_cost = 0.0;            // F_l^n, $/year when always active
    double schedule_frequency = 0.0;    // opportunities/year
    double boost_per_activation = 0.0;  // extra sign-ups per activation

    /// Extra sign-ups per year when the activity is always on.
    [[nodiscard]] double annual_increase(const std::vector<VolunteerClass>& classes) const;
    /// Cost of a single activation.
    [[nodiscard]] double cost_per_activation() const { return fixed_cost / schedule_frequency; }
};

/// Builds an activity whose annual increase (per_activation x frequency) is
/// split over the targeted classes in proportion to their base sign-ups.
EngagementActivity proportional_activity(std::string name,
                                         const std::vector<VolunteerClass>& classes,
                                         const std::vector<std::size_t>& targets,
                                         double boost_per_activation,
                                         double schedule_frequency,
                                         double fixed_cost);

struct NthSystemParams {
    std::vector<VolunteerClass> classes;
    std::vector<EngagementActivity> activities;
    double scaling_n = 1.0;
    double idleness_penalty = 0.0;  // p^n, $ per unfilled slot
    int slots_per_day = 0;
    int working_days_per_week = 6;
    /// Excess-capacity constants; derived from the balanced-load identity when absent.
    std::optional<std::vector<double>> alpha;

    [[nodiscard]] int working_days_per_year() const { return working_days_per_week * kWeeksPerYear; }
    [[nodiscard]] double total_annual_arrivals() const;
    /// rho^n = sum r k / mu + sum lambda / mu.
    [[nodiscard]] double traffic_intensity() const;
};

struct Diagnostic {
    std::string field;
    std::string expected;
    std::string actual;
    std::string message;
};

/// Empty iff every invariant of the n-th system holds.
std::vector<Diagnostic> validate_nth_params(const NthSystemParams& params);

struct LimitClass {
    std::string name;
    VolunteerKind kind = VolunteerKind::Repeat;
    double mu = 0.0;
    double k_hat = 0.0;   // repeat only
    double r = 0.0;       // repeat only
    double lambda = 0.0;  // one-time only
    double alpha = 0.0;
    double gamma = 0.0;
    double x = 0.0;
};

struct LimitActivity {
    std::string name;
    std::vector<ClassBoost> boosts;  // r-hat_{jl} or lambda-hat_{jl} in limit units
    double fixed_cost = 0.0;         // F_l
    double schedule_frequency = 0.0;
    double boost_per_activation = 0.0;
};

/// Limit-system parameters. Carries the non-scaled metadata needed to
/// reconstruct the n-th system exactly.
struct LimitParams {
    std::vector<LimitClass> classes;
    std::vector<LimitActivity> activities;
    double n = 1.0;
    double penalty = 0.0;  // p, numerically equal to p^n
    bool alpha_supplied = false;
    int slots_per_day = 0;
    int working_days_per_week = 6;
};

LimitParams scale_to_limit(const NthSystemParams& params);
/// Inverse of scale_to_limit.
NthSystemParams unscale(const LimitParams& limit);

/// |sum r k-hat / mu + sum lambda / mu - 1|.
double balanced_load_check(const LimitParams& limit);

struct LadderOptions {
    std::optional<double> theta0_override;
    /// Multiply gamma_j by 364 before it enters kappa.
    bool annualize_gamma = false;
};

/// Drift/cost ladder of the limit system, rungs sorted by marginal cost.
struct DriftLadder {
    std::vector<double> theta;          // theta_0 .. theta_L
    std::vector<double> eta;            // eta_1 .. eta_L
    std::vector<double> c_hat;          // c-hat_1 .. c-hat_L, strictly increasing
    std::vector<double> cost_at_theta;  // c(theta_0) .. c(theta_L)
    std::vector<double> fixed_cost;     // F of each rung
    double kappa = 0.0;
    double sigma2 = 0.0;
    double penalty = 0.0;
    double theta0_analytic = 0.0;
    /// activity_order[l] is the input activity index placed on rung l+1.
    std::vector<std::size_t> activity_order;

    [[nodiscard]] std::size_t rungs() const { return eta.size(); }

    /// Ladder from explicit rung data; throws ConfigError on invariant violation.
    static DriftLadder from_rungs(double theta0, std::vector<double> eta, std::vector<double> c_hat,
                                  double kappa, double sigma2, double penalty);
};

DriftLadder derive_ladder(const LimitParams& limit, const LadderOptions& options = {});

/// Food-bank base case: 3 classes, 4 activities, n = 56,000.
NthSystemParams base_case_params(double gamma_per_day = 0.01);

}  // namespace engage
