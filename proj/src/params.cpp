#include "engage/params.hpp"

#include "engage/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace engage {

namespace {

std::string fmt_double(double value, int precision = 6) {
    std::ostringstream os;
    os.precision(precision);
    os << value;
    return os.str();
}

std::string fmt_fixed(double value, int decimals) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(decimals);
    os << value;
    return os.str();
}

constexpr double kHeavyTrafficBand = 0.05;

}  // namespace

double VolunteerClass::annual_arrivals() const {
    return kind == VolunteerKind::Repeat ? repose_exit_rate * population : arrival_rate;
}

double EngagementActivity::annual_increase(const std::vector<VolunteerClass>& classes) const {
    double total = 0.0;
    for (const auto& boost : boosts) {
        const auto& cls = classes.at(boost.class_index);
        total += cls.kind == VolunteerKind::Repeat ? boost.rate * cls.population : boost.rate;
    }
    return total;
}

EngagementActivity proportional_activity(std::string name,
                                         const std::vector<VolunteerClass>& classes,
                                         const std::vector<std::size_t>& targets,
                                         double boost_per_activation,
                                         double schedule_frequency,
                                         double fixed_cost) {
    EngagementActivity activity;
    activity.name = std::move(name);
    activity.fixed_cost = fixed_cost;
    activity.schedule_frequency = schedule_frequency;
    activity.boost_per_activation = boost_per_activation;

    double base = 0.0;
    for (auto j : targets) {
        base += classes.at(j).annual_arrivals();
    }
    if (base <= 0.0) {
        throw ConfigError("activity '" + activity.name + "' targets classes with no base arrivals");
    }
    const double increase = boost_per_activation * schedule_frequency;
    for (auto j : targets) {
        const auto& cls = classes.at(j);
        const double extra = increase * cls.annual_arrivals() / base;
        const double rate = cls.kind == VolunteerKind::Repeat ? extra / cls.population : extra;
        activity.boosts.push_back({j, rate});
    }
    return activity;
}

double NthSystemParams::total_annual_arrivals() const {
    double total = 0.0;
    for (const auto& cls : classes) {
        total += cls.annual_arrivals();
    }
    return total;
}

double NthSystemParams::traffic_intensity() const {
    double rho = 0.0;
    for (const auto& cls : classes) {
        if (cls.service_rate > 0.0) {
            rho += cls.annual_arrivals() / cls.service_rate;
        }
    }
    return rho;
}

std::vector<Diagnostic> validate_nth_params(const NthSystemParams& params) {
    std::vector<Diagnostic> out;
    auto add = [&out](std::string field, std::string expected, std::string actual, std::string message) {
        out.push_back({std::move(field), std::move(expected), std::move(actual), std::move(message)});
    };

    if (params.classes.empty()) {
        add("classes", "at least one class", "0", "no volunteer classes");
    }
    if (!(params.scaling_n > 0.0)) {
        add("scaling_n", "> 0", fmt_double(params.scaling_n), "scaling_n nonpositive");
    }
    if (!(params.idleness_penalty > 0.0)) {
        add("idleness_penalty", "> 0", fmt_double(params.idleness_penalty), "idleness_penalty nonpositive");
    }
    if (params.slots_per_day <= 0) {
        add("slots_per_day", "> 0", std::to_string(params.slots_per_day), "slots_per_day nonpositive");
    }
    if (params.working_days_per_week < 1 || params.working_days_per_week > kDaysPerWeek) {
        add("working_days_per_week", "1..7", std::to_string(params.working_days_per_week),
            "working_days_per_week out of range");
    }

    const double capacity =
        static_cast<double>(params.slots_per_day) * params.working_days_per_year();
    for (std::size_t j = 0; j < params.classes.size(); ++j) {
        const auto& c = params.classes[j];
        const std::string prefix = "classes[" + std::to_string(j) + "].";
        if (c.kind == VolunteerKind::Repeat) {
            if (!(c.population > 0.0)) {
                add(prefix + "population", "> 0", fmt_double(c.population), "repeat class needs population");
            }
            if (!(c.repose_exit_rate > 0.0)) {
                add(prefix + "repose_exit_rate", "> 0", fmt_double(c.repose_exit_rate),
                    "repeat class needs repose_exit_rate");
            }
            if (c.arrival_rate != 0.0) {
                add(prefix + "arrival_rate", "unset", fmt_double(c.arrival_rate),
                    "repeat class must not set arrival_rate");
            }
        } else {
            if (!(c.arrival_rate > 0.0)) {
                add(prefix + "arrival_rate", "> 0", fmt_double(c.arrival_rate), "one-time class needs arrival_rate");
            }
            if (c.population != 0.0 || c.repose_exit_rate != 0.0) {
                add(prefix + "population", "unset", fmt_double(c.population),
                    "one-time class must not set population or repose_exit_rate");
            }
        }
        if (c.abandonment_rate < 0.0) {
            add(prefix + "abandonment_rate", ">= 0", fmt_double(c.abandonment_rate), "abandonment_rate negative");
        }
        if (!(c.service_rate > 0.0)) {
            add(prefix + "service_rate", "> 0", fmt_double(c.service_rate), "service_rate nonpositive");
        } else if (std::abs(c.service_rate - capacity) > 1e-9 * capacity) {
            add(prefix + "service_rate", fmt_double(capacity), fmt_double(c.service_rate),
                "service_rate must equal slots_per_day x working days/year (shared server)");
        }
        if (!(c.mix_weight > 0.0)) {
            add(prefix + "mix_weight", "> 0", fmt_double(c.mix_weight), "mix_weight nonpositive");
        }
    }

    if (!params.classes.empty() && out.empty()) {
        const double rho = params.traffic_intensity();
        if (rho > 1.0 + kHeavyTrafficBand) {
            add("classes", "traffic intensity within 5% of 1", fmt_fixed(rho, 2),
                "traffic intensity " + fmt_fixed(rho, 2) + " exceeds " + fmt_fixed(1.0 + kHeavyTrafficBand, 2) +
                    " heavy-traffic band");
        } else if (rho < 1.0 - kHeavyTrafficBand) {
            add("classes", "traffic intensity within 5% of 1", fmt_fixed(rho, 2),
                "traffic intensity " + fmt_fixed(rho, 2) + " below " + fmt_fixed(1.0 - kHeavyTrafficBand, 2) +
                    " heavy-traffic band");
        }
    }

    for (std::size_t l = 0; l < params.activities.size(); ++l) {
        const auto& a = params.activities[l];
        const std::string prefix = "activities[" + std::to_string(l) + "].";
        bool indices_ok = true;
        for (const auto& b : a.boosts) {
            if (b.class_index >= params.classes.size()) {
                add(prefix + "boosts", "valid class index", std::to_string(b.class_index), "boost targets unknown class");
                indices_ok = false;
            } else if (b.rate < 0.0) {
                add(prefix + "boosts", ">= 0", fmt_double(b.rate), "boost negative");
            }
        }
        if (!(a.fixed_cost > 0.0)) {
            add(prefix + "fixed_cost", "> 0", fmt_double(a.fixed_cost), "fixed_cost nonpositive");
        }
        if (!(a.schedule_frequency > 0.0)) {
            add(prefix + "schedule_frequency", "> 0", fmt_double(a.schedule_frequency),
                "schedule_frequency nonpositive");
        }
        if (indices_ok && a.schedule_frequency > 0.0) {
            const double derived = a.annual_increase(params.classes);
            const double scheduled = a.boost_per_activation * a.schedule_frequency;
            if (std::abs(derived - scheduled) > 1.0) {
                add(prefix + "boost_per_activation", fmt_double(derived), fmt_double(scheduled),
                    "boost_per_activation x schedule_frequency disagrees with the annual increase of the boosts");
            }
        }
    }

    if (params.alpha && params.alpha->size() != params.classes.size()) {
        add("alpha", std::to_string(params.classes.size()) + " entries", std::to_string(params.alpha->size()),
            "alpha length must match classes");
    }
    return out;
}

LimitParams scale_to_limit(const NthSystemParams& params) {
    if (!(params.scaling_n > 0.0)) {
        throw ConfigError("scaling_n must be positive, got " + fmt_double(params.scaling_n));
    }
    if (auto diags = validate_nth_params(params); !diags.empty()) {
        std::string msg = "invalid n-th system parameters:";
        for (const auto& d : diags) {
            msg += "\n  " + d.field + ": " + d.message;
        }
        throw ConfigError(msg);
    }

    const double n = params.scaling_n;
    const double sn = std::sqrt(n);
    // Common relative rate scale that enforces the balanced-load identity.
    const double balance = 1.0 / params.traffic_intensity();

    LimitParams limit;
    limit.n = n;
    limit.penalty = params.idleness_penalty;
    limit.alpha_supplied = params.alpha.has_value();
    limit.slots_per_day = params.slots_per_day;
    limit.working_days_per_week = params.working_days_per_week;

    for (std::size_t j = 0; j < params.classes.size(); ++j) {
        const auto& c = params.classes[j];
        LimitClass lc;
        lc.name = c.name;
        lc.kind = c.kind;
        lc.mu = c.service_rate / n;
        lc.gamma = c.abandonment_rate;
        lc.x = c.mix_weight;
        if (c.kind == VolunteerKind::Repeat) {
            lc.k_hat = c.population / n;
            lc.alpha = params.alpha ? (*params.alpha)[j] : sn * (balance - 1.0) * c.repose_exit_rate;
            lc.r = c.repose_exit_rate + lc.alpha / sn;
            if (!(lc.r > 0.0)) {
                throw ConfigError("scaled repose exit rate of class '" + c.name + "' is nonpositive");
            }
        } else {
            lc.alpha = params.alpha ? (*params.alpha)[j] : (balance - 1.0) * c.arrival_rate / sn;
            lc.lambda = c.arrival_rate / n + lc.alpha / sn;
            if (!(lc.lambda > 0.0)) {
                throw ConfigError("scaled arrival rate of class '" + c.name + "' is nonpositive");
            }
        }
        limit.classes.push_back(std::move(lc));
    }

    for (const auto& a : params.activities) {
        LimitActivity la;
        la.name = a.name;
        la.fixed_cost = a.fixed_cost / sn;
        la.schedule_frequency = a.schedule_frequency;
        la.boost_per_activation = a.boost_per_activation;
        for (const auto& b : a.boosts) {
            const bool repeat = params.classes[b.class_index].kind == VolunteerKind::Repeat;
            la.boosts.push_back({b.class_index, repeat ? sn * b.rate : b.rate / sn});
        }
        limit.activities.push_back(std::move(la));
    }
    return limit;
}

NthSystemParams unscale(const LimitParams& limit) {
    const double n = limit.n;
    const double sn = std::sqrt(n);
    NthSystemParams params;
    params.scaling_n = n;
    params.idleness_penalty = limit.penalty;
    params.slots_per_day = limit.slots_per_day;
    params.working_days_per_week = limit.working_days_per_week;

    std::vector<double> alpha;
    for (const auto& lc : limit.classes) {
        VolunteerClass c;
        c.name = lc.name;
        c.kind = lc.kind;
        c.service_rate = lc.mu * n;
        c.abandonment_rate = lc.gamma;
        c.mix_weight = lc.x;
        if (lc.kind == VolunteerKind::Repeat) {
            c.population = lc.k_hat * n;
            c.repose_exit_rate = lc.r - lc.alpha / sn;
        } else {
            c.arrival_rate = n * lc.lambda - sn * lc.alpha;
        }
        alpha.push_back(lc.alpha);
        params.classes.push_back(std::move(c));
    }
    if (limit.alpha_supplied) {
        params.alpha = std::move(alpha);
    }

    for (const auto& la : limit.activities) {
        EngagementActivity a;
        a.name = la.name;
        a.fixed_cost = la.fixed_cost * sn;
        a.schedule_frequency = la.schedule_frequency;
        a.boost_per_activation = la.boost_per_activation;
        for (const auto& b : la.boosts) {
            const bool repeat = limit.classes.at(b.class_index).kind == VolunteerKind::Repeat;
            a.boosts.push_back({b.class_index, repeat ? b.rate / sn : b.rate * sn});
        }
        params.activities.push_back(std::move(a));
    }
    return params;
}

double balanced_load_check(const LimitParams& limit) {
    double load = 0.0;
    for (const auto& c : limit.classes) {
        load += c.kind == VolunteerKind::Repeat ? c.r * c.k_hat / c.mu : c.lambda / c.mu;
    }
    return std::abs(load - 1.0);
}

DriftLadder DriftLadder::from_rungs(double theta0, std::vector<double> eta, std::vector<double> c_hat,
                                    double kappa, double sigma2, double penalty) {
    if (eta.empty() || eta.size() != c_hat.size()) {
        throw ConfigError("ladder needs matching, nonempty eta and c_hat");
    }
    if (!(theta0 < 0.0)) {
        throw ConfigError("theta_0 must be negative, got " + fmt_double(theta0));
    }
    if (!(kappa > 0.0) || !(sigma2 > 0.0) || !(penalty > 0.0)) {
        throw ConfigError("kappa, sigma_w^2 and p must be positive");
    }
    DriftLadder ladder;
    ladder.kappa = kappa;
    ladder.sigma2 = sigma2;
    ladder.penalty = penalty;
    ladder.theta0_analytic = theta0;
    ladder.theta.push_back(theta0);
    ladder.cost_at_theta.push_back(0.0);
    for (std::size_t l = 0; l < eta.size(); ++l) {
        if (!(eta[l] > 0.0)) {
            throw ConfigError("eta_" + std::to_string(l + 1) + " must be positive");
        }
        if (l > 0 && !(c_hat[l - 1] < c_hat[l])) {
            throw ConfigError("c_hat must be strictly increasing (rungs " + std::to_string(l) + " and " +
                              std::to_string(l + 1) + ")");
        }
        ladder.theta.push_back(ladder.theta.back() + eta[l]);
        ladder.cost_at_theta.push_back(ladder.cost_at_theta.back() + c_hat[l] * eta[l]);
        ladder.fixed_cost.push_back(c_hat[l] * eta[l]);
        ladder.activity_order.push_back(l);
    }
    if (!(c_hat.back() < penalty)) {
        throw ConfigError("largest marginal cost " + fmt_double(c_hat.back()) + " must be below p = " +
                          fmt_double(penalty));
    }
    ladder.eta = std::move(eta);
    ladder.c_hat = std::move(c_hat);
    return ladder;
}

DriftLadder derive_ladder(const LimitParams& limit, const LadderOptions& options) {
    if (limit.activities.empty()) {
        throw ConfigError("at least one engagement activity is required");
    }
    const double gamma_scale = options.annualize_gamma ? static_cast<double>(kDaysPerYear) : 1.0;

    double kappa = 0.0;
    double sigma2 = 0.0;
    double theta0 = 0.0;
    for (const auto& c : limit.classes) {
        const double gamma = c.gamma * gamma_scale;
        if (c.kind == VolunteerKind::Repeat) {
            kappa += (c.r + gamma) * c.x;
            sigma2 += 2.0 * c.r * c.k_hat / (c.mu * c.mu);
            theta0 -= c.k_hat * c.alpha / c.mu;
        } else {
            kappa += gamma * c.x;
            sigma2 += 2.0 * c.lambda / (c.mu * c.mu);
            theta0 -= c.alpha / c.mu;
        }
    }

    const std::size_t L = limit.activities.size();
    std::vector<double> eta(L, 0.0);
    std::vector<double> c_hat(L, 0.0);
    for (std::size_t l = 0; l < L; ++l) {
        const auto& a = limit.activities[l];
        for (const auto& b : a.boosts) {
            const auto& c = limit.classes.at(b.class_index);
            eta[l] += c.kind == VolunteerKind::Repeat ? c.k_hat * b.rate / c.mu : b.rate / c.mu;
        }
        if (!(eta[l] > 0.0)) {
            throw ConfigError("activity '" + a.name + "' has zero drift increment");
        }
        c_hat[l] = a.fixed_cost / eta[l];
    }

    std::vector<std::size_t> order(L);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return c_hat[a] < c_hat[b]; });
    for (std::size_t i = 1; i < L; ++i) {
        if (c_hat[order[i - 1]] == c_hat[order[i]]) {
            throw ConfigError("activities '" + limit.activities[order[i - 1]].name + "' and '" +
                              limit.activities[order[i]].name + "' have equal marginal cost " +
                              fmt_double(c_hat[order[i]]) + "; merge them");
        }
    }
    if (!(c_hat[order.back()] < limit.penalty)) {
        throw ConfigError("activity '" + limit.activities[order.back()].name + "' has marginal cost " +
                          fmt_double(c_hat[order.back()]) + " >= p = " + fmt_double(limit.penalty) +
                          "; it can never be worth using");
    }

    const double theta0_used = options.theta0_override.value_or(theta0);
    if (!(theta0_used < 0.0)) {
        throw ConfigError("theta_0 = " + fmt_double(theta0_used) +
                          " is not negative (analytic value " + fmt_double(theta0) +
                          "); supply a negative theta0 override");
    }

    DriftLadder ladder;
    ladder.kappa = kappa;
    ladder.sigma2 = sigma2;
    ladder.penalty = limit.penalty;
    ladder.theta0_analytic = theta0;
    ladder.activity_order = order;
    ladder.theta.push_back(theta0_used);
    ladder.cost_at_theta.push_back(0.0);
    for (auto idx : order) {
        ladder.eta.push_back(eta[idx]);
        ladder.c_hat.push_back(c_hat[idx]);
        ladder.fixed_cost.push_back(limit.activities[idx].fixed_cost);
        ladder.theta.push_back(ladder.theta.back() + eta[idx]);
        ladder.cost_at_theta.push_back(ladder.cost_at_theta.back() + limit.activities[idx].fixed_cost);
    }
    return ladder;
}

NthSystemParams base_case_params(double gamma_per_day) {
    NthSystemParams p;
    p.scaling_n = 56000.0;
    p.idleness_penalty = 50.0;
    p.slots_per_day = 250;
    p.working_days_per_week = 6;
    const double mu = 250.0 * 6 * kWeeksPerYear;

    VolunteerClass corporate{"corporate", VolunteerKind::Repeat, 11200.0, 0.60, 0.0, gamma_per_day, mu, 0.0};
    VolunteerClass individual{"individual", VolunteerKind::Repeat, 16800.0, 3.125, 0.0, gamma_per_day, mu, 0.0};
    VolunteerClass social{"social_group", VolunteerKind::OneTime, 0.0, 0.0, 19540.0, gamma_per_day, mu, 0.0};
    p.classes = {corporate, individual, social};
    // FCFS mix weights: each class's share of sign-ups.
    const double total = p.total_annual_arrivals();
    for (auto& c : p.classes) {
        c.mix_weight = c.annual_arrivals() / total;
    }

    p.activities = {
        proportional_activity("orientation", p.classes, {0, 1, 2}, 2.0, 312.0, 936.0),
        proportional_activity("e_communication", p.classes, {0, 1, 2}, 15.0, 52.0, 1820.0),
        proportional_activity("speaking", p.classes, {2}, 20.0, 12.0, 720.0),
        proportional_activity("tabling", p.classes, {0, 2}, 30.0, 12.0, 1800.0),
    };
    return p;
}

}  // namespace engage
