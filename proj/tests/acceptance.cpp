// Acceptance run: one PASS/FAIL line per criterion. Exits 0 unless --strict
// is given and a criterion fails.

#include "engage/bellman.hpp"
#include "engage/cli.hpp"
#include "engage/config.hpp"
#include "engage/cost.hpp"
#include "engage/error.hpp"
#include "engage/simulator.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace engage;

namespace {

const std::string kConfigs = std::string(ENGAGE_SOURCE_DIR) + "/configs/";

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

bool within(double value, double target, double tol) { return std::abs(value - target) <= tol; }

// ---- 1: calibration -------------------------------------------------------

Outcome calibration() {
    const auto limit = scale_to_limit(base_case_params(0.01));
    LadderOptions opt;
    opt.theta0_override = -2.3;
    const auto lad = derive_ladder(limit, opt);

    // Each value is compared at four decimals or at its reference precision,
    // whichever is coarser.
    bool ok = within(lad.kappa, 2.12367, 5e-5) && within(lad.sigma2, 1.436, 5e-4);
    const double eta[4] = {1.89315, 2.36643, 0.72813, 1.09220};
    const double F[4] = {3.96, 7.69, 3.04, 7.61};
    double worst_eta = 0.0;
    double worst_f = 0.0;
    for (std::size_t r = 0; r < lad.rungs(); ++r) {
        const auto a = lad.activity_order[r];
        worst_eta = std::max(worst_eta, std::abs(lad.eta[r] - eta[a]));
        worst_f = std::max(worst_f, std::abs(lad.fixed_cost[r] - F[a]));
    }
    ok = ok && lad.rungs() == 4 && worst_eta <= 5e-5 && worst_f <= 5e-3;
    return {ok, "kappa " + fmt(lad.kappa, 5) + ", sigma2 " + fmt(lad.sigma2, 4) + ", max |eta err| " +
                    sci(worst_eta) + ", max |F err| " + sci(worst_f)};
}

// ---- 2: conjugate oracle --------------------------------------------------

Outcome conjugate() {
    const auto lad = derive_ladder(scale_to_limit(base_case_params(0.01)), LadderOptions{-2.3, false});
    const double lo = lad.theta.front();
    const double hi = lad.theta.back();

    // Brute force over a 1e-4 grid of the drift domain, nodes included.
    std::vector<double> grid;
    for (double x = lo; x < hi; x += 1e-4) {
        grid.push_back(x);
    }
    grid.insert(grid.end(), lad.theta.begin(), lad.theta.end());
    std::sort(grid.begin(), grid.end());
    std::vector<double> cost(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        cost[i] = cost_c(lad, grid[i]);
    }

    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> pick(-5.0, lad.penalty + 5.0);
    double phi_err = 0.0;
    double psi_err = 0.0;
    for (int k = 0; k < 200; ++k) {
        const double y = pick(rng);
        double best = -INFINITY;
        double arg = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double val = y * grid[i] - cost[i];
            if (val > best) {
                best = val;
                arg = grid[i];
            }
        }
        phi_err = std::max(phi_err, std::abs(conjugate_phi(lad, y) - best));
        psi_err = std::max(psi_err, std::abs(psi_min_argmax(lad, y) - arg));
    }

    // phi(y) against the exact integral of the step function psi from 0.
    double int_err = 0.0;
    for (int k = 0; k <= 1000; ++k) {
        const double y = lad.penalty * k / 1000.0;
        std::vector<double> cuts = {0.0};
        for (double c : lad.c_hat) {
            if (c < y) {
                cuts.push_back(c);
            }
        }
        cuts.push_back(y);
        double integral = 0.0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
            integral += (cuts[i + 1] - cuts[i]) * psi_min_argmax(lad, mid);
        }
        int_err = std::max(int_err, std::abs(conjugate_phi(lad, y) - integral));
    }
    const bool ok = phi_err <= 1e-9 && psi_err <= 1e-9 && int_err <= 1e-12;
    return {ok, "max |phi err| " + sci(phi_err) + ", max |psi err| " + sci(psi_err) +
                    ", max |phi - int psi| " + sci(int_err)};
}

// ---- 3: Bellman solution --------------------------------------------------

double node_phi(const DriftLadder& lad, double y) {
    double best = -INFINITY;
    for (std::size_t i = 0; i < lad.theta.size(); ++i) {
        best = std::max(best, y * lad.theta[i] - lad.cost_at_theta[i]);
    }
    return best;
}

double rhs(const DriftLadder& lad, double beta, double x, double v) {
    const double w = lad.penalty - v;
    return 2.0 / lad.sigma2 * (beta - lad.kappa * x * w + node_phi(lad, w));
}

Outcome bellman() {
    const auto start = std::chrono::steady_clock::now();
    const auto lad = derive_ladder(scale_to_limit(base_case_params(0.01)), LadderOptions{-1.4, false});
    const auto sol = solve_beta_star(lad);

    bool monotone = sol.sample_v.front() == 0.0;
    for (std::size_t i = 1; i < sol.sample_v.size(); ++i) {
        monotone = monotone && sol.sample_v[i] >= sol.sample_v[i - 1];
    }
    const double gap = std::abs(sol.value(lad, sol.x_max) - lad.penalty);
    bool tau_ok = !sol.tau.empty() && sol.tau.back() > 0.0;
    for (std::size_t l = 1; l < sol.tau.size(); ++l) {
        tau_ok = tau_ok && sol.tau[l] < sol.tau[l - 1];
    }

    // Independent RK4, fine enough that its own error sits well below the bound.
    const double h = 1e-4;
    const double x_end = 1.5 * sol.tau.front();
    const auto n = static_cast<std::size_t>(std::llround(x_end / h));
    double v = 0.0;
    double rk_dev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = i * h;
        const double k1 = rhs(lad, sol.beta_star, x, v);
        const double k2 = rhs(lad, sol.beta_star, x + h / 2, v + h / 2 * k1);
        const double k3 = rhs(lad, sol.beta_star, x + h / 2, v + h / 2 * k2);
        const double k4 = rhs(lad, sol.beta_star, x + h, v + h * k3);
        v += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        const double cf = sol.value(lad, (i + 1) * h);
        rk_dev = std::max(rk_dev, std::abs(cf - v) / std::abs(cf));
    }

    double residual = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double x = sol.x_max * (i + 0.5) / 1000.0;
        residual = std::max(residual, std::abs(sol.derivative(lad, x) - rhs(lad, sol.beta_star, x, sol.value(lad, x))));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const bool ok = sol.value(lad, 0.0) == 0.0 && monotone && gap < 0.05 && rk_dev < 1e-6 && residual < 1e-6 &&
                    tau_ok && secs < 5.0;
    std::ostringstream d;
    d << "beta* " << fmt(sol.beta_star, 6) << ", terminal gap " << fmt(gap, 5) << ", RK4 rel dev " << sci(rk_dev)
      << ", residual " << sci(residual) << ", tau";
    for (double t : sol.tau) {
        d << " " << fmt(t, 4);
    }
    d << (monotone ? ", monotone" : ", NOT monotone") << ", solve+check " << fmt(secs, 2) << " s";
    return {ok, d.str()};
}

// ---- shared experiment helpers --------------------------------------------

RunConfig with_gamma(RunConfig c, double gamma) {
    for (auto& cls : c.params.classes) {
        cls.abandonment_rate = gamma;
    }
    c.sim.params = c.params;
    return c;
}

// theta0 is tuned on the experiment's separate tuning seed, then the best
// static subset and the dynamic policy are compared on the main seed.
struct Compared {
    double theta0 = 0.0;
    SweepRow row;
};

Compared tuned_comparison(RunConfig c) {
    c.ladder.theta0_override = tune_from_config(c).best_theta0;
    auto rows = sweep_gamma(c.sim, {c.params.classes.front().abandonment_rate},
                            [&c](const NthSystemParams&) { return Policy{solve_from_config(c).policy}; });
    return {*c.ladder.theta0_override, std::move(rows.front())};
}

std::string describe(const Compared& r) {
    const auto& rep = r.row.report;
    std::ostringstream d;
    d << "theta0 " << fmt(r.theta0, 2) << ", best " << r.row.best_static << " " << fmt(r.row.best_static_total, 0);
    if (rep.best_static) {
        d << " +- " << fmt(rep.policies[*rep.best_static].total_cost.half_width, 0);
    }
    d << ", dynamic " << fmt(r.row.dynamic_total, 0);
    if (rep.dynamic) {
        d << " +- " << fmt(rep.policies[*rep.dynamic].total_cost.half_width, 0);
    }
    d << ", improvement " << fmt(r.row.improvement_pct, 1) << "%";
    return d.str();
}

// ---- 4: base case ---------------------------------------------------------

Outcome base_case() {
    const auto r = tuned_comparison(parse_config(kConfigs + "base_case.yaml"));
    const bool static_ok = r.row.best_static == "static{1,2,3}" && r.row.best_static_total >= 3528.0 &&
                           r.row.best_static_total <= 3928.0;
    const bool dynamic_ok = r.row.dynamic_total >= 2740.0 && r.row.dynamic_total <= 3506.0;
    const bool improvement_ok = within(r.row.improvement_pct, 16.2, 8.0);
    std::string why;
    if (!static_ok) why += " [best static outside 3528..3928 or not {1,2,3}]";
    if (!dynamic_ok) why += " [dynamic outside 2740..3506]";
    if (!improvement_ok) why += " [improvement outside 16.2 +- 8]";
    return {static_ok && dynamic_ok && improvement_ok, describe(r) + why};
}

// ---- 5: abandonment sweep -------------------------------------------------

Outcome sweep() {
    const auto base = parse_config(kConfigs + "base_case.yaml");
    const std::vector<double> gammas = {0.005, 0.010, 0.015, 0.020, 0.025};
    const std::vector<double> target = {30.6, 16.2, 8.6, 3.8, 0.3};
    std::vector<double> imp;
    bool ok = true;
    std::ostringstream d;
    for (std::size_t i = 0; i < gammas.size(); ++i) {
        const auto r = tuned_comparison(with_gamma(base, gammas[i]));
        imp.push_back(r.row.improvement_pct);
        const bool near = within(r.row.improvement_pct, target[i], 8.0);
        ok = ok && near;
        d << (i ? "; " : "") << "g=" << fmt(gammas[i], 3) << " " << fmt(r.row.improvement_pct, 1) << "% (target "
          << fmt(target[i], 1) << (near ? ")" : ", off)");
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < imp.size(); ++i) {
        decreasing = decreasing && imp[i] < imp[i - 1];
    }
    d << (decreasing ? "; strictly decreasing" : "; NOT strictly decreasing");
    return {ok && decreasing, d.str()};
}

// ---- 6: robustness variants -----------------------------------------------

Outcome robustness() {
    const auto slots = tuned_comparison(parse_config(kConfigs + "random_slots.yaml"));
    const auto gamma = tuned_comparison(parse_config(kConfigs + "gamma_abandonment.yaml"));
    const bool slots_ok = slots.row.dynamic_total < slots.row.best_static_total;
    const bool gamma_ok = gamma.row.improvement_pct >= 30.0;
    return {slots_ok && gamma_ok, "random slots {230,250,270}: " + describe(slots) +
                                      (slots_ok ? "" : " [dynamic not below static]") + "; Gamma(2, 2g): " +
                                      describe(gamma) + (gamma_ok ? "" : " [below 30%]")};
}

// ---- 7: structural identities ---------------------------------------------

Outcome identities() {
    auto config = parse_config(kConfigs + "base_case.yaml");
    config.sim.horizon_years = 5;
    config.sim.warmup_years = 2;
    config.sim.measure_years = 3;
    config.sim.replications = 5;
    const auto& acts = config.params.activities;

    const auto dynamic = solve_from_config(config).policy;
    std::vector<NamedPolicy> policies = {{"static{}", StaticPolicy{{}}},
                                         {"static{1,2,3}", StaticPolicy{{0, 1, 2}}},
                                         {"static{1,2,3,4}", StaticPolicy{{0, 1, 2, 3}}},
                                         {"dynamic", dynamic},
                                         {"dynamic again", dynamic}};
    const auto first = run_experiment(config.sim, policies);
    const auto second = run_experiment(config.sim, policies);

    bool conserve = true;
    bool static_cost = true;
    bool crn = true;
    for (std::size_t p = 0; p < policies.size(); ++p) {
        const auto& reps = first.policies[p].replications;
        for (std::size_t r = 0; r < reps.size(); ++r) {
            const auto& m = reps[r];
            conserve = conserve && m.arrivals == m.served + m.abandoned + m.final_queue;
            const auto& again = second.policies[p].replications[r];
            crn = crn && m.total_cost == again.total_cost && m.arrivals == again.arrivals &&
                  m.served == again.served && m.abandoned == again.abandoned;
            if (const auto* s = std::get_if<StaticPolicy>(&policies[p].policy)) {
                double expected = 0.0;
                for (auto a : s->active) {
                    expected += acts[a].fixed_cost;
                }
                static_cost = static_cost && std::abs(m.activity_cost - expected) <= 1e-9 * std::max(1.0, expected);
            }
        }
    }
    double twin_gap = 0.0;
    for (std::size_t r = 0; r < first.policies[3].replications.size(); ++r) {
        twin_gap = std::max(twin_gap, std::abs(first.policies[3].replications[r].total_cost -
                                               first.policies[4].replications[r].total_cost));
    }
    crn = crn && twin_gap == 0.0;
    const bool ok = conserve && static_cost && crn;
    return {ok, std::string("conservation ") + (conserve ? "ok" : "VIOLATED") + ", static activity cost " +
                    (static_cost ? "exact" : "MISMATCH") + ", CRN rerun/twin policies " +
                    (crn ? "identical" : "DIFFER") + " over " + std::to_string(policies.size()) + " policies x " +
                    std::to_string(config.sim.replications) + " reps"};
}

// ---- 8: transition --------------------------------------------------------

Outcome transition() {
    auto config = parse_config(kConfigs + "base_case.yaml");
    const auto& e = config.experiment;
    config.sim.horizon_years = e.transition_horizon_years;
    config.sim.warmup_years = 0;
    config.sim.measure_years = e.transition_horizon_years;
    config.sim.replications = e.transition_replications;
    const auto tr = transition_experiment(config.sim, StaticPolicy{{0, 1, 2}}, solve_from_config(config).policy,
                                          e.switch_day);
    const auto sq = static_cast<std::size_t>(tr.switch_quarter);

    // Period before the switch, after the 20-year warmup.
    const std::size_t first_q = 20 * 4;
    double a = 0.0;
    double b = 0.0;
    for (std::size_t q = first_q; q < sq; ++q) {
        a += tr.sim_a.mean[q].mean_queue;
        b += tr.sim_b.mean[q].mean_queue;
    }
    a /= static_cast<double>(sq - first_q);
    b /= static_cast<double>(sq - first_q);

    const std::size_t q2 = sq + 1;
    std::vector<double> diff;
    for (std::size_t r = 0; r < tr.sim_a.per_rep.size(); ++r) {
        diff.push_back(tr.sim_b.per_rep[r][q2].mean_queue - tr.sim_a.per_rep[r][q2].mean_queue);
    }
    const auto est = estimate(diff);
    const bool pre_ok = b - a >= 20.0;
    const bool post_ok = std::abs(est.mean) <= est.half_width;
    return {pre_ok && post_ok, "pre-switch mean queue A " + fmt(a, 1) + ", B " + fmt(b, 1) + " (B - A " +
                                   fmt(b - a, 1) + "); quarter " + std::to_string(q2 + 1) + " B - A " +
                                   fmt(est.mean, 2) + " +- " + fmt(est.half_width, 2) + " over " +
                                   std::to_string(diff.size()) + " reps"};
}

struct Criterion {
    int id;
    std::string name;
    double budget_s;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app("acceptance criteria");
    bool strict = false;
    std::vector<int> only;
    app.add_flag("--strict", strict, "exit nonzero if any criterion fails");
    app.add_option("--only", only, "criterion numbers to run")->check(CLI::Range(1, 8));
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria = {
        {1, "calibration", 1.0, calibration},
        {2, "conjugate oracle", 1.0, conjugate},
        {3, "Bellman solution", 5.0, bellman},
        {4, "base case costs", 300.0, base_case},
        {5, "abandonment sweep", 900.0, sweep},
        {6, "robustness variants", 900.0, robustness},
        {7, "structural identities", 60.0, identities},
        {8, "transition", 600.0, transition},
    };
    const std::set<int> selected(only.begin(), only.end());

    int failed = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) {
            continue;
        }
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& ex) {
            o = {false, std::string("exception: ") + ex.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (secs > c.budget_s) {
            o.pass = false;
            o.detail += " [over runtime budget " + fmt(c.budget_s, 0) + " s]";
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << c.id << " " << c.name << " (" << fmt(secs, 1)
                  << " s): " << o.detail << std::endl;
    }
    std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed"))
              << std::endl;
    return strict && failed ? 1 : 0;
}
