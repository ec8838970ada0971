#include "engage/simulator.hpp"

#include "engage/error.hpp"
#include "engage/rng.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

namespace engage {

namespace {

constexpr int kNever = std::numeric_limits<int>::max();

struct Opportunity {
    std::size_t activity;
    int gap;
};

bool policy_active(const Policy& policy, int day, std::size_t queue, std::size_t l) {
    return std::visit(
        [&](const auto& p) -> bool {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, StaticPolicy>) {
                return std::find(p.active.begin(), p.active.end(), l) != p.active.end();
            } else if constexpr (std::is_same_v<T, DynamicPolicy>) {
                return static_cast<double>(queue) < p.queue_thresholds[l];
            } else {
                return policy_active(day < p.switch_day ? *p.first : *p.second, day, queue, l);
            }
        },
        policy);
}

enum class EntryState : std::uint8_t { Waiting, Served, Abandoned };

// Sign-up list for one replication. Entries are appended in arrival order, so
// the FCFS head is a cursor; abandonment clocks are bucketed by day.
class SignupList {
public:
    SignupList(std::size_t classes, int horizon_days, bool per_class_fifo)
        : clocks_(static_cast<std::size_t>(horizon_days)), count_(classes, 0),
          by_class_(per_class_fifo ? classes : 0), class_head_(by_class_.size(), 0) {}

    void push(std::size_t cls, int abandon_day) {
        const auto seq = static_cast<std::uint32_t>(entries_.size());
        entries_.push_back({static_cast<std::uint8_t>(cls), EntryState::Waiting});
        if (!by_class_.empty()) {
            by_class_[cls].push_back(seq);
        }
        ++count_[cls];
        ++total_;
        if (abandon_day < static_cast<int>(clocks_.size())) {
            clocks_[abandon_day].push_back(seq);
        }
    }

    void expire(int day, std::vector<std::uint64_t>& per_class) {
        auto& bucket = clocks_[day];
        for (auto seq : bucket) {
            auto& e = entries_[seq];
            if (e.state == EntryState::Waiting) {
                e.state = EntryState::Abandoned;
                --count_[e.cls];
                --total_;
                ++per_class[e.cls];
            }
        }
        std::vector<std::uint32_t>().swap(bucket);
    }

    void serve_oldest() {
        while (entries_[head_].state != EntryState::Waiting) {
            ++head_;
        }
        take(head_);
    }

    void serve_from(std::size_t cls) {
        auto& fifo = by_class_[cls];
        auto& h = class_head_[cls];
        while (entries_[fifo[h]].state != EntryState::Waiting) {
            ++h;
        }
        take(fifo[h]);
    }

    [[nodiscard]] std::size_t size() const { return total_; }
    [[nodiscard]] std::size_t size(std::size_t cls) const { return count_[cls]; }

private:
    struct Entry {
        std::uint8_t cls;
        EntryState state;
    };

    void take(std::uint32_t seq) {
        auto& e = entries_[seq];
        e.state = EntryState::Served;
        --count_[e.cls];
        --total_;
    }

    std::vector<Entry> entries_;
    std::size_t head_ = 0;
    std::vector<std::vector<std::uint32_t>> clocks_;
    std::vector<std::size_t> count_;
    std::size_t total_ = 0;
    std::vector<std::vector<std::uint32_t>> by_class_;
    std::vector<std::size_t> class_head_;
};

int draw_slots(const SlotsModel& model, std::uint64_t seed, int rep, int day) {
    if (const auto* fixed = std::get_if<FixedSlots>(&model)) {
        return fixed->count;
    }
    const auto& d3 = std::get<Discrete3Slots>(model);
    Substream rng(seed, static_cast<std::uint64_t>(rep), Purpose::Slots, 0, static_cast<std::uint64_t>(day));
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    return u < 0.25 ? d3.a1 : (u < 0.75 ? d3.a2 : d3.a3);
}

std::uint64_t poisson(double mean, Substream& rng) {
    if (!(mean > 0.0)) {
        return 0;
    }
    return static_cast<std::uint64_t>(std::poisson_distribution<long long>(mean)(rng));
}

int abandon_day(const AbandonModel& model, double gamma, int day, Substream& rng) {
    double t = 0.0;
    if (std::holds_alternative<ExponentialAbandon>(model)) {
        if (!(gamma > 0.0)) {
            return kNever;
        }
        t = std::exponential_distribution<double>(gamma)(rng);
    } else {
        const auto& g = std::get<GammaAbandon>(model);
        const double rate = g.rate_per_day.value_or(g.shape * gamma);
        if (!(rate > 0.0)) {
            return kNever;
        }
        t = std::gamma_distribution<double>(g.shape, 1.0 / rate)(rng);
    }
    const double c = std::ceil(t);
    if (c >= static_cast<double>(kNever - day)) {
        return kNever;
    }
    return day + std::max(1, static_cast<int>(c));
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t salt) {
    return salt == 0 ? seed : mix64(seed + 0x632be59bd9b4e019ULL * salt);
}

}  // namespace

void validate_sim_config(const SimConfig& c) {
    if (c.horizon_years <= 0 || c.warmup_years < 0 || c.measure_years <= 0) {
        throw SimulationError("horizon, warmup and measure years must be positive");
    }
    if (c.warmup_years + c.measure_years > c.horizon_years) {
        throw SimulationError("warmup + measure exceeds horizon");
    }
    if (c.replications < 1) {
        throw SimulationError("replications must be at least 1");
    }
    if (const auto* d3 = std::get_if<Discrete3Slots>(&c.slots)) {
        if (d3->a1 < 0 || d3->a2 < 0 || d3->a3 < 0) {
            throw SimulationError("slot counts must be nonnegative");
        }
    } else if (std::get<FixedSlots>(c.slots).count < 0) {
        throw SimulationError("slot count must be nonnegative");
    }
    if (const auto* g = std::get_if<GammaAbandon>(&c.abandon)) {
        if (!(g->shape > 0.0) || (g->rate_per_day && !(*g->rate_per_day > 0.0))) {
            throw SimulationError("gamma abandonment needs positive shape and rate");
        }
    }
    if (c.params.classes.empty() || c.params.classes.size() > 255) {
        throw SimulationError("simulation supports 1 to 255 volunteer classes");
    }
    if (c.params.working_days_per_week < 1 || c.params.working_days_per_week > kDaysPerWeek) {
        throw SimulationError("working_days_per_week out of range");
    }
}

void validate_policy(const Policy& policy, std::size_t activities, int horizon_days) {
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, StaticPolicy>) {
                for (auto l : p.active) {
                    if (l >= activities) {
                        throw SimulationError("static policy names activity " + std::to_string(l + 1) +
                                              " but only " + std::to_string(activities) + " exist");
                    }
                }
            } else if constexpr (std::is_same_v<T, DynamicPolicy>) {
                if (p.queue_thresholds.size() != activities || p.ladder_order.size() != activities) {
                    throw SimulationError("dynamic policy needs one threshold per activity");
                }
                for (std::size_t i = 0; i < p.ladder_order.size(); ++i) {
                    const double q = p.queue_thresholds.at(p.ladder_order[i]);
                    if (!(q >= 0.0)) {
                        throw SimulationError("dynamic thresholds must be nonnegative");
                    }
                    if (i > 0 && !(q < p.queue_thresholds.at(p.ladder_order[i - 1]))) {
                        throw SimulationError("dynamic thresholds must be strictly decreasing along the ladder");
                    }
                }
            } else {
                if (!p.first || !p.second) {
                    throw SimulationError("switch policy needs both phases");
                }
                if (p.switch_day < 0 || p.switch_day > horizon_days) {
                    throw SimulationError("switch day outside the horizon");
                }
                validate_policy(*p.first, activities, horizon_days);
                validate_policy(*p.second, activities, horizon_days);
            }
        },
        policy);
}

std::string subset_name(const std::vector<std::size_t>& active) {
    std::string s = "{";
    for (std::size_t i = 0; i < active.size(); ++i) {
        s += (i ? "," : "") + std::to_string(active[i] + 1);
    }
    return s + "}";
}

std::string describe_policy(const Policy& policy) {
    return std::visit(
        [](const auto& p) -> std::string {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, StaticPolicy>) {
                return "static" + subset_name(p.active);
            } else if constexpr (std::is_same_v<T, DynamicPolicy>) {
                return "dynamic";
            } else {
                return "switch(" + describe_policy(*p.first) + "->" + describe_policy(*p.second) + "@" +
                       std::to_string(p.switch_day) + ")";
            }
        },
        policy);
}

std::vector<int> schedule_for(const EngagementActivity& activity, int working_days_per_week) {
    const double f = activity.schedule_frequency;
    const int working_days = working_days_per_week * kWeeksPerYear;
    std::vector<int> days;
    if (std::abs(f - working_days) < 1e-9) {
        for (int d = 0; d < kDaysPerYear; ++d) {
            if (d % kDaysPerWeek < working_days_per_week) {
                days.push_back(d);
            }
        }
        return days;
    }
    if (!(f > 0.0) || f > kDaysPerYear) {
        throw SimulationError("activity '" + activity.name + "' frequency must lie in (0, 364]");
    }
    for (int k = 0;; ++k) {
        const int d = static_cast<int>(std::floor(k * kDaysPerYear / f + 1e-9));
        if (d >= kDaysPerYear) {
            break;
        }
        if (days.empty() || days.back() != d) {
            days.push_back(d);
        }
    }
    return days;
}

std::vector<double> apply_boost(const std::vector<VolunteerClass>& classes, const EngagementActivity& activity,
                                bool active, int gap_days) {
    std::vector<double> extra(classes.size(), 0.0);
    if (!active || gap_days <= 0) {
        return extra;
    }
    const double total = activity.annual_increase(classes);
    if (!(total > 0.0)) {
        return extra;
    }
    const double per_day = activity.boost_per_activation / gap_days;
    for (const auto& b : activity.boosts) {
        const auto& c = classes[b.class_index];
        const double share = (c.kind == VolunteerKind::Repeat ? b.rate * c.population : b.rate) / total;
        extra[b.class_index] += per_day * share;
    }
    return extra;
}

SimMetrics run_replication(const SimConfig& config, const Policy& policy, int rep_index, std::uint64_t stream_salt) {
    validate_sim_config(config);
    const auto& params = config.params;
    const std::size_t J = params.classes.size();
    const std::size_t L = params.activities.size();
    const int horizon = config.horizon_days();
    validate_policy(policy, L, horizon);

    const int wdpw = params.working_days_per_week;
    const int warmup_end = config.warmup_years * kDaysPerYear;
    const int measure_end = warmup_end + config.measure_years * kDaysPerYear;
    const std::uint64_t seed = stream_seed(config.seed, stream_salt);
    const auto rep = static_cast<std::uint64_t>(rep_index);

    // Opportunities by day of year.
    std::vector<std::vector<Opportunity>> opportunities(kDaysPerYear);
    for (std::size_t l = 0; l < L; ++l) {
        const auto days = schedule_for(params.activities[l], wdpw);
        for (std::size_t i = 0; i < days.size(); ++i) {
            const int next = i + 1 < days.size() ? days[i + 1] : days.front() + kDaysPerYear;
            opportunities[days[i]].push_back({l, next - days[i]});
        }
    }

    const double rate_scale =
        config.base_rates == BaseRates::Balanced ? 1.0 / params.traffic_intensity() : 1.0;
    std::vector<double> base_daily(J);
    for (std::size_t j = 0; j < J; ++j) {
        base_daily[j] = rate_scale * params.classes[j].annual_arrivals() / kDaysPerYear;
    }
    const double working_scale = static_cast<double>(kDaysPerWeek) / wdpw;

    std::vector<std::vector<double>> boost(L, std::vector<double>(J, 0.0));
    SignupList list(J, horizon, config.discipline == ServiceDiscipline::PenaltyFunction);
    SimMetrics m;
    m.window_activations.assign(L, 0);
    m.window_opportunities.assign(L, 0);
    double window_activity_cost = 0.0;
    double window_queue_sum = 0.0;

    const bool quarterly = config.quarterly;
    const int quarters = horizon / kDaysPerQuarter;
    std::vector<double> q_queue(quarterly ? quarters : 0, 0.0);
    std::vector<double> q_cost(q_queue.size(), 0.0);
    std::vector<std::uint64_t> q_arr(q_queue.size(), 0);
    std::vector<std::uint64_t> q_ab(q_queue.size(), 0);

    std::vector<std::uint64_t> abandoned_today(J, 0);

    for (int day = 0; day < horizon; ++day) {
        const bool in_window = day >= warmup_end && day < measure_end;
        const int quarter = quarterly ? day / kDaysPerQuarter : 0;
        const bool in_quarter = quarterly && quarter < quarters;
        const bool working = day % kDaysPerWeek < wdpw;
        const std::size_t queue_now = list.size();

        if (in_window) {
            window_queue_sum += static_cast<double>(queue_now);
        }
        if (in_quarter) {
            q_queue[quarter] += static_cast<double>(queue_now);
        }

        // 1. Activity decisions on opportunity days.
        for (const auto& opp : opportunities[day % kDaysPerYear]) {
            const auto& act = params.activities[opp.activity];
            const bool on = policy_active(policy, day, queue_now, opp.activity);
            boost[opp.activity] = apply_boost(params.classes, act, on, opp.gap);
            if (in_window) {
                ++m.window_opportunities[opp.activity];
                if (on) {
                    ++m.window_activations[opp.activity];
                    window_activity_cost += act.cost_per_activation();
                }
            }
            if (on && in_quarter) {
                q_cost[quarter] += act.cost_per_activation();
            }
        }

        // 2. Sign-ups.
        const bool accrue = config.arrival_days == ArrivalDays::Calendar || working;
        const double scale = config.arrival_days == ArrivalDays::Calendar ? 1.0 : working_scale;
        for (std::size_t j = 0; j < J; ++j) {
            if (!accrue) {
                break;
            }
            const auto& c = params.classes[j];
            double factor = scale;
            if (config.thinning && c.kind == VolunteerKind::Repeat) {
                factor *= std::max(0.0, (c.population - static_cast<double>(list.size(j))) / c.population);
            }
            double extra = 0.0;
            for (std::size_t l = 0; l < L; ++l) {
                extra += boost[l][j];
            }
            Substream base_rng(seed, rep, Purpose::BaseArrivals, j, static_cast<std::uint64_t>(day));
            Substream boost_rng(seed, rep, Purpose::BoostArrivals, j, static_cast<std::uint64_t>(day));
            const std::uint64_t n = poisson(base_daily[j] * factor, base_rng) + poisson(extra * factor, boost_rng);
            Substream clock_rng(seed, rep, Purpose::Abandonment, j, static_cast<std::uint64_t>(day));
            for (std::uint64_t i = 0; i < n; ++i) {
                list.push(j, abandon_day(config.abandon, c.abandonment_rate, day, clock_rng));
            }
            m.arrivals += n;
            if (in_window) {
                m.window_arrivals += n;
            }
            if (in_quarter) {
                q_arr[quarter] += n;
            }
        }

        // 3. Abandonment.
        std::fill(abandoned_today.begin(), abandoned_today.end(), 0);
        list.expire(day, abandoned_today);
        for (auto a : abandoned_today) {
            m.abandoned += a;
            if (in_window) {
                m.window_abandoned += a;
            }
            if (in_quarter) {
                q_ab[quarter] += a;
            }
        }

        // 4. Service.
        if (working) {
            const int slots = draw_slots(config.slots, seed, rep_index, day);
            int filled = 0;
            while (filled < slots && list.size() > 0) {
                if (config.discipline == ServiceDiscipline::Fcfs) {
                    list.serve_oldest();
                } else {
                    std::size_t cls = 0;
                    const double total = static_cast<double>(list.size());
                    double best = -std::numeric_limits<double>::infinity();
                    for (std::size_t j = 0; j < J; ++j) {
                        if (list.size(j) == 0) {
                            continue;
                        }
                        const double pj = static_cast<double>(list.size(j)) - params.classes[j].mix_weight * total;
                        if (pj > best) {
                            best = pj;
                            cls = j;
                        }
                    }
                    list.serve_from(cls);
                }
                ++filled;
            }
            m.served += static_cast<std::uint64_t>(filled);
            if (in_window) {
                m.window_slots += static_cast<std::uint64_t>(slots);
                m.window_unfilled += static_cast<std::uint64_t>(slots - filled);
            }
        }
    }

    m.final_queue = list.size();
    const double years = config.measure_years;
    m.activity_cost = window_activity_cost / years;
    m.idle_cost = static_cast<double>(m.window_unfilled) * params.idleness_penalty / years;
    m.total_cost = m.activity_cost + m.idle_cost;
    m.idle_pct = m.window_slots ? 100.0 * static_cast<double>(m.window_unfilled) / m.window_slots : 0.0;
    m.abandon_pct = m.window_arrivals ? 100.0 * static_cast<double>(m.window_abandoned) / m.window_arrivals : 0.0;
    m.mean_queue_length = window_queue_sum / (measure_end - warmup_end);
    for (std::size_t l = 0; l < L; ++l) {
        m.activity_usage_pct.push_back(m.window_opportunities[l]
                                           ? 100.0 * m.window_activations[l] / m.window_opportunities[l]
                                           : 0.0);
    }
    for (int q = 0; q < static_cast<int>(q_queue.size()); ++q) {
        QuarterStats s;
        s.mean_queue = q_queue[q] / kDaysPerQuarter;
        s.abandon_pct = q_arr[q] ? 100.0 * static_cast<double>(q_ab[q]) / q_arr[q] : 0.0;
        s.activity_cost = q_cost[q];
        m.quarters.push_back(s);
    }
    return m;
}

Estimate estimate(const std::vector<double>& samples) {
    Estimate e;
    const auto n = samples.size();
    if (n == 0) {
        return e;
    }
    double sum = 0.0;
    for (double s : samples) {
        sum += s;
    }
    e.mean = sum / n;
    if (n < 2) {
        return e;
    }
    double ss = 0.0;
    for (double s : samples) {
        ss += (s - e.mean) * (s - e.mean);
    }
    const double sd = std::sqrt(ss / (n - 1));
    const boost::math::students_t dist(static_cast<double>(n - 1));
    e.half_width = boost::math::quantile(dist, 0.975) * sd / std::sqrt(static_cast<double>(n));
    return e;
}

namespace {

template <class F>
void parallel_for(std::size_t count, unsigned threads, F&& body) {
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < count;) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

PolicySummary summarize(const std::string& name, const Policy& policy, std::vector<SimMetrics> reps) {
    PolicySummary s{name, policy, {}, {}, {}, {}, {}, {}, {}, {}};
    auto collect = [&reps](auto field) {
        std::vector<double> v;
        for (const auto& r : reps) {
            v.push_back(field(r));
        }
        return estimate(v);
    };
    s.activity_cost = collect([](const SimMetrics& r) { return r.activity_cost; });
    s.idle_cost = collect([](const SimMetrics& r) { return r.idle_cost; });
    s.total_cost = collect([](const SimMetrics& r) { return r.total_cost; });
    s.idle_pct = collect([](const SimMetrics& r) { return r.idle_pct; });
    s.abandon_pct = collect([](const SimMetrics& r) { return r.abandon_pct; });
    s.mean_queue_length = collect([](const SimMetrics& r) { return r.mean_queue_length; });
    const std::size_t L = reps.empty() ? 0 : reps.front().activity_usage_pct.size();
    for (std::size_t l = 0; l < L; ++l) {
        s.activity_usage_pct.push_back(collect([l](const SimMetrics& r) { return r.activity_usage_pct[l]; }));
    }
    s.replications = std::move(reps);
    return s;
}

}  // namespace

ExperimentReport run_experiment(const SimConfig& config, const std::vector<NamedPolicy>& policies) {
    if (policies.empty()) {
        throw SimulationError("run_experiment needs at least one policy");
    }
    validate_sim_config(config);
    for (const auto& p : policies) {
        validate_policy(p.policy, config.params.activities.size(), config.horizon_days());
    }
    const auto R = static_cast<std::size_t>(config.replications);
    std::vector<std::vector<SimMetrics>> results(policies.size(), std::vector<SimMetrics>(R));
    parallel_for(policies.size() * R, config.threads, [&](std::size_t job) {
        const std::size_t p = job / R;
        const std::size_t r = job % R;
        results[p][r] = run_replication(config, policies[p].policy, static_cast<int>(r), config.crn ? 0 : p + 1);
    });

    ExperimentReport report;
    for (std::size_t p = 0; p < policies.size(); ++p) {
        report.policies.push_back(summarize(policies[p].name, policies[p].policy, std::move(results[p])));
        const auto& pol = policies[p].policy;
        if (std::holds_alternative<StaticPolicy>(pol)) {
            if (!report.best_static ||
                report.policies[p].total_cost.mean < report.policies[*report.best_static].total_cost.mean) {
                report.best_static = p;
            }
        } else if (std::holds_alternative<DynamicPolicy>(pol) && !report.dynamic) {
            report.dynamic = p;
        }
    }
    if (report.best_static && report.dynamic) {
        const auto& s = report.policies[*report.best_static];
        const auto& d = report.policies[*report.dynamic];
        if (s.total_cost.mean != 0.0) {
            report.improvement_pct = 100.0 * (s.total_cost.mean - d.total_cost.mean) / s.total_cost.mean;
        }
        std::vector<double> diff;
        for (std::size_t r = 0; r < R; ++r) {
            diff.push_back(s.replications[r].total_cost - d.replications[r].total_cost);
        }
        report.paired_saving = estimate(diff);
    }
    return report;
}

namespace {

std::vector<NamedPolicy> all_static(std::size_t L) {
    if (L > 16) {
        throw SimulationError("static enumeration limited to 16 activities");
    }
    std::vector<NamedPolicy> out;
    for (std::size_t mask = 0; mask < (std::size_t{1} << L); ++mask) {
        StaticPolicy sp;
        for (std::size_t l = 0; l < L; ++l) {
            if (mask >> l & 1U) {
                sp.active.push_back(l);
            }
        }
        out.push_back({"static" + subset_name(sp.active), sp});
    }
    return out;
}

}  // namespace

ExperimentReport enumerate_static(const SimConfig& config) {
    return run_experiment(config, all_static(config.params.activities.size()));
}

std::vector<SweepRow> sweep_gamma(const SimConfig& config, const std::vector<double>& gammas,
                                  const PolicyHook& dynamic_for) {
    std::vector<SweepRow> rows;
    for (double g : gammas) {
        if (!(g > 0.0)) {
            throw SimulationError("sweep gamma values must be positive");
        }
        SimConfig cfg = config;
        for (auto& c : cfg.params.classes) {
            c.abandonment_rate = g;
        }
        auto policies = all_static(cfg.params.activities.size());
        policies.push_back({"dynamic", dynamic_for(cfg.params)});
        auto report = run_experiment(cfg, policies);
        SweepRow row;
        row.gamma = g;
        const auto& s = report.policies[*report.best_static];
        row.best_static = s.name;
        row.best_static_total = s.total_cost.mean;
        row.dynamic_total = report.policies[*report.dynamic].total_cost.mean;
        row.improvement_pct = report.improvement_pct.value_or(0.0);
        row.report = std::move(report);
        rows.push_back(std::move(row));
    }
    return rows;
}

TuneResult tune_theta0(const SimConfig& config, const std::vector<double>& theta0_grid,
                       const std::function<Policy(double)>& dynamic_for) {
    if (theta0_grid.empty()) {
        throw SimulationError("theta0 grid is empty");
    }
    TuneResult result;
    double best = std::numeric_limits<double>::infinity();
    for (double t : theta0_grid) {
        TuneRow row;
        row.theta0 = t;
        try {
            if (!(t < 0.0)) {
                throw ConfigError("theta0 must be negative");
            }
            const auto report = run_experiment(config, {{"dynamic", dynamic_for(t)}});
            row.total_cost = report.policies.front().total_cost;
            if (row.total_cost.mean < best) {
                best = row.total_cost.mean;
                result.best_theta0 = t;
            }
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        result.grid.push_back(std::move(row));
    }
    if (!std::isfinite(best)) {
        throw SimulationError("no theta0 in the grid produced a usable policy");
    }
    return result;
}

TransitionResult transition_experiment(const SimConfig& config, const Policy& static_policy,
                                       const Policy& dynamic_policy, int switch_day) {
    if (switch_day % kDaysPerQuarter != 0) {
        throw SimulationError("switch day must fall on a quarter boundary");
    }
    SimConfig cfg = config;
    cfg.quarterly = true;
    cfg.crn = true;
    SwitchPolicy sw{std::make_shared<const Policy>(static_policy), std::make_shared<const Policy>(dynamic_policy),
                    switch_day};
    const auto report = run_experiment(cfg, {{"sim_a", dynamic_policy}, {"sim_b", Policy{sw}}});

    auto series = [](const PolicySummary& s) {
        TransitionSeries ts;
        for (const auto& r : s.replications) {
            ts.per_rep.push_back(r.quarters);
        }
        const std::size_t Q = ts.per_rep.front().size();
        ts.mean.assign(Q, {});
        for (const auto& rep : ts.per_rep) {
            for (std::size_t q = 0; q < Q; ++q) {
                ts.mean[q].mean_queue += rep[q].mean_queue / ts.per_rep.size();
                ts.mean[q].abandon_pct += rep[q].abandon_pct / ts.per_rep.size();
                ts.mean[q].activity_cost += rep[q].activity_cost / ts.per_rep.size();
            }
        }
        return ts;
    };
    TransitionResult tr;
    tr.sim_a = series(report.policies[0]);
    tr.sim_b = series(report.policies[1]);
    tr.switch_quarter = switch_day / kDaysPerQuarter;
    return tr;
}

}  // namespace engage
