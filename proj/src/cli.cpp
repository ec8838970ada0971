#include "engage/cli.hpp"

#include "engage/error.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace engage {

namespace {

std::string num(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

std::string fixed(double v, int decimals) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(decimals) << v;
    return os.str();
}

std::string field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string q = "\"";
    for (char c : s) {
        q += c == '"' ? std::string("\"\"") : std::string(1, c);
    }
    return q + "\"";
}

std::string provenance(const RunConfig& config, int replications) {
    return config.hash + "," + std::to_string(config.sim.seed) + "," + std::to_string(replications);
}

const char* kProvenanceHeader = "config_hash,seed,replications";

std::vector<std::size_t> parse_subset(const std::string& text, std::size_t activities) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) {
            continue;
        }
        std::size_t v = 0;
        const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
        if (res.ec != std::errc{} || res.ptr != item.data() + item.size() || v < 1 || v > activities) {
            throw ConfigError("bad activity index in policy: '" + item + "' (1.." + std::to_string(activities) + ")");
        }
        out.push_back(v - 1);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

Policy dynamic_for(const RunConfig& config) {
    return solve_from_config(config).policy;
}

}  // namespace

SolvedPolicy solve_from_config(const RunConfig& config) {
    return solve_dynamic_policy(config.params, config.ladder, config.solver);
}

namespace {

SimConfig tune_config(const RunConfig& config) {
    SimConfig cfg = config.sim;
    cfg.seed = config.experiment.tune_seed;
    cfg.replications = config.experiment.tune_replications;
    return cfg;
}

}  // namespace

TuneResult tune_from_config(const RunConfig& config) {
    return tune_theta0(tune_config(config), config.experiment.theta0_grid, [&config](double t) {
        RunConfig c = config;
        c.ladder.theta0_override = t;
        return Policy{dynamic_for(c)};
    });
}

NamedPolicy parse_policy_spec(const std::string& spec, const RunConfig& config) {
    const std::size_t L = config.params.activities.size();
    if (spec == "dynamic") {
        return {"dynamic", dynamic_for(config)};
    }
    if (spec.rfind("static:", 0) == 0) {
        StaticPolicy p{parse_subset(spec.substr(7), L)};
        return {"static" + subset_name(p.active), p};
    }
    if (spec.rfind("switch:", 0) == 0) {
        const auto at = spec.find('@');
        if (at == std::string::npos) {
            throw ConfigError("switch policy needs '@<day>': " + spec);
        }
        int day = 0;
        const auto tail = spec.substr(at + 1);
        const auto res = std::from_chars(tail.data(), tail.data() + tail.size(), day);
        if (res.ec != std::errc{} || res.ptr != tail.data() + tail.size()) {
            throw ConfigError("bad switch day: " + tail);
        }
        const Policy first = StaticPolicy{parse_subset(spec.substr(7, at - 7), L)};
        SwitchPolicy sw{std::make_shared<const Policy>(first), std::make_shared<const Policy>(dynamic_for(config)),
                        day};
        return {describe_policy(sw), sw};
    }
    throw ConfigError("unknown policy: '" + spec + "' (expected static:<i,j,..>, dynamic or switch:<i,j,..>@<day>)");
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + tmp.string());
        }
        out << content;
        out.flush();
        if (!out) {
            throw std::runtime_error("write failed: " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

std::string thresholds_csv(const RunConfig& config, const SolvedPolicy& solved) {
    std::ostringstream os;
    os << "rung,activity,theta,eta,c_hat,tau,q_star,beta_star,terminal_gap," << kProvenanceHeader << "\n";
    const auto& lad = solved.ladder;
    for (std::size_t r = 0; r < lad.rungs(); ++r) {
        os << r + 1 << "," << field(config.params.activities[lad.activity_order[r]].name) << "," << num(lad.theta[r + 1])
           << "," << num(lad.eta[r]) << "," << num(lad.c_hat[r]) << "," << num(solved.solution.tau[r]) << ","
           << num(solved.rung_thresholds[r]) << "," << num(solved.solution.beta_star) << ","
           << num(solved.solution.terminal_gap) << "," << provenance(config, 0) << "\n";
    }
    return os.str();
}

std::string report_csv(const RunConfig& config, const ExperimentReport& report) {
    std::ostringstream os;
    os << "policy,metric,mean,half_width,best_static," << kProvenanceHeader << "\n";
    for (std::size_t i = 0; i < report.policies.size(); ++i) {
        const auto& p = report.policies[i];
        const auto reps = static_cast<int>(p.replications.size());
        const int best = report.best_static && *report.best_static == i ? 1 : 0;
        auto row = [&](const std::string& metric, const Estimate& e) {
            os << field(p.name) << "," << metric << "," << num(e.mean) << "," << num(e.half_width) << "," << best << ","
               << provenance(config, reps) << "\n";
        };
        row("total_cost", p.total_cost);
        row("activity_cost", p.activity_cost);
        row("idle_cost", p.idle_cost);
        row("idle_pct", p.idle_pct);
        row("abandon_pct", p.abandon_pct);
        row("mean_queue", p.mean_queue_length);
        for (std::size_t l = 0; l < p.activity_usage_pct.size(); ++l) {
            row("usage_pct_" + config.params.activities[l].name, p.activity_usage_pct[l]);
        }
    }
    if (report.improvement_pct && report.paired_saving) {
        const auto reps = static_cast<int>(report.policies.front().replications.size());
        os << "comparison,improvement_pct," << num(*report.improvement_pct) << ",,0," << provenance(config, reps)
           << "\n";
        os << "comparison,paired_saving," << num(report.paired_saving->mean) << ","
           << num(report.paired_saving->half_width) << ",0," << provenance(config, reps) << "\n";
    }
    return os.str();
}

std::string sweep_csv(const RunConfig& config, const std::vector<SweepRow>& rows,
                      const std::vector<double>& theta0_used) {
    std::ostringstream os;
    os << "gamma_per_day,theta0,best_static,best_static_total,best_static_half_width,dynamic_total,"
          "dynamic_half_width,improvement_pct,"
       << kProvenanceHeader << "\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const auto& s = r.report.policies[*r.report.best_static];
        const auto& d = r.report.policies[*r.report.dynamic];
        os << num(r.gamma) << "," << num(theta0_used.at(i)) << "," << field(r.best_static) << ","
           << num(s.total_cost.mean) << "," << num(s.total_cost.half_width) << "," << num(d.total_cost.mean) << ","
           << num(d.total_cost.half_width) << "," << num(r.improvement_pct) << ","
           << provenance(config, static_cast<int>(s.replications.size())) << "\n";
    }
    return os.str();
}

std::string tune_csv(const RunConfig& config, const TuneResult& result) {
    std::ostringstream os;
    os << "theta0,total_cost,half_width,best,error,config_hash,seed,replications\n";
    for (const auto& row : result.grid) {
        os << num(row.theta0) << "," << (row.error ? "" : num(row.total_cost.mean)) << ","
           << (row.error ? "" : num(row.total_cost.half_width)) << "," << (row.theta0 == result.best_theta0 ? 1 : 0)
           << "," << field(row.error.value_or("")) << "," << config.hash << "," << config.experiment.tune_seed << ","
           << config.experiment.tune_replications << "\n";
    }
    return os.str();
}

std::string transition_csv(const RunConfig& config, const TransitionSeries& series, int replications) {
    std::ostringstream os;
    os << "quarter,mean_queue,abandon_pct,activity_cost," << kProvenanceHeader << "\n";
    for (std::size_t q = 0; q < series.mean.size(); ++q) {
        const auto& s = series.mean[q];
        os << q + 1 << "," << num(s.mean_queue) << "," << num(s.abandon_pct) << "," << num(s.activity_cost) << ","
           << provenance(config, replications) << "\n";
    }
    return os.str();
}

namespace {

void print_report(std::ostream& out, const ExperimentReport& report) {
    out << std::left << std::setw(24) << "policy" << std::right << std::setw(16) << "total $/yr" << std::setw(12)
        << "activity" << std::setw(10) << "idle" << std::setw(10) << "aband%" << std::setw(9) << "queue"
        << "  usage%\n";
    for (std::size_t i = 0; i < report.policies.size(); ++i) {
        const auto& p = report.policies[i];
        const auto total = fixed(p.total_cost.mean, 0) + " +- " + fixed(p.total_cost.half_width, 0);
        out << std::left << std::setw(24) << (p.name + (report.best_static == i ? " *" : "")) << std::right
            << std::setw(16) << total << std::setw(12) << fixed(p.activity_cost.mean, 0) << std::setw(10)
            << fixed(p.idle_cost.mean, 0) << std::setw(10) << fixed(p.abandon_pct.mean, 2) << std::setw(9)
            << fixed(p.mean_queue_length.mean, 0) << " ";
        for (const auto& u : p.activity_usage_pct) {
            out << " " << fixed(u.mean, 0);
        }
        out << "\n";
    }
    if (report.improvement_pct) {
        out << "improvement over best static: " << fixed(*report.improvement_pct, 1) << "%\n";
    }
}

struct Options {
    std::string config;
    std::vector<std::string> policies;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> reps;
    bool tune = false;
};

RunConfig load(const Options& o) {
    auto config = parse_config(o.config);
    if (o.seed) {
        config.sim.seed = *o.seed;
    }
    if (o.reps) {
        if (*o.reps < 1) {
            throw ConfigError("--reps must be at least 1");
        }
        config.sim.replications = *o.reps;
    }
    return config;
}

int cmd_solve(const Options& o, std::ostream& out) {
    const auto config = load(o);
    const auto solved = solve_from_config(config);
    const auto& lad = solved.ladder;
    out << "kappa " << lad.kappa << "  sigma2 " << lad.sigma2 << "  theta0 " << lad.theta[0] << " (analytic "
        << lad.theta0_analytic << ")\n";
    out << "beta* " << fixed(solved.solution.beta_star, 10)
        << "  terminal gap " << solved.solution.terminal_gap << " at x_max " << solved.solution.x_max << "  ("
        << solved.solution.bisection_steps << " bisections, " << solved.solution.escalations << " escalations)\n";
    out << "rung  activity            c_hat       tau       q*\n";
    for (std::size_t r = 0; r < lad.rungs(); ++r) {
        out << std::left << std::setw(6) << r + 1 << std::setw(18) << config.params.activities[lad.activity_order[r]].name
            << std::right << std::setw(9) << fixed(lad.c_hat[r], 5) << std::setw(10) << fixed(solved.solution.tau[r], 5)
            << std::setw(9) << fixed(solved.rung_thresholds[r], 1) << "\n";
    }
    write_atomic(std::filesystem::path(o.out_dir) / "thresholds.csv", thresholds_csv(config, solved));
    return kExitOk;
}

int cmd_simulate(const Options& o, std::ostream& out) {
    const auto config = load(o);
    std::vector<NamedPolicy> policies;
    for (const auto& spec : o.policies.empty() ? std::vector<std::string>{"dynamic"} : o.policies) {
        policies.push_back(parse_policy_spec(spec, config));
    }
    const auto report = run_experiment(config.sim, policies);
    print_report(out, report);
    write_atomic(std::filesystem::path(o.out_dir) / "report.csv", report_csv(config, report));
    return kExitOk;
}

int cmd_enumerate(const Options& o, std::ostream& out) {
    const auto config = load(o);
    const auto report = enumerate_static(config.sim);
    print_report(out, report);
    write_atomic(std::filesystem::path(o.out_dir) / "report.csv", report_csv(config, report));
    return kExitOk;
}

int cmd_sweep(const Options& o, std::ostream& out) {
    const auto config = load(o);
    std::vector<double> used;
    std::vector<SweepRow> rows;
    for (double g : config.experiment.gammas_per_day) {
        RunConfig c = config;
        for (auto& cls : c.params.classes) {
            cls.abandonment_rate = g;
        }
        c.sim.params = c.params;
        if (o.tune) {
            c.ladder.theta0_override = tune_from_config(c).best_theta0;
        }
        used.push_back(c.ladder.theta0_override.value_or(std::nan("")));
        auto part = sweep_gamma(c.sim, {g}, [&c](const NthSystemParams&) { return dynamic_for(c); });
        rows.push_back(std::move(part.front()));
        const auto& r = rows.back();
        out << "gamma " << fixed(g, 3) << "  theta0 " << fixed(used.back(), 2) << "  best " << r.best_static << " "
            << fixed(r.best_static_total, 0) << "  dynamic " << fixed(r.dynamic_total, 0) << "  improvement "
            << fixed(r.improvement_pct, 1) << "%\n";
    }
    write_atomic(std::filesystem::path(o.out_dir) / "sweep.csv", sweep_csv(config, rows, used));
    return kExitOk;
}

int cmd_tune(const Options& o, std::ostream& out) {
    const auto config = load(o);
    const auto result = tune_from_config(config);
    for (const auto& row : result.grid) {
        out << "theta0 " << fixed(row.theta0, 2) << "  ";
        if (row.error) {
            out << "error: " << *row.error << "\n";
        } else {
            out << fixed(row.total_cost.mean, 0) << " +- " << fixed(row.total_cost.half_width, 0)
                << (row.theta0 == result.best_theta0 ? "  *" : "") << "\n";
        }
    }
    out << "best theta0 " << fixed(result.best_theta0, 2) << "\n";
    write_atomic(std::filesystem::path(o.out_dir) / "tune.csv", tune_csv(config, result));
    return kExitOk;
}

int cmd_transition(const Options& o, std::ostream& out) {
    auto config = load(o);
    const auto& e = config.experiment;
    config.sim.horizon_years = e.transition_horizon_years;
    config.sim.warmup_years = 0;
    config.sim.measure_years = e.transition_horizon_years;
    if (!o.reps) {
        config.sim.replications = e.transition_replications;
    }
    const auto static_policy =
        parse_policy_spec(o.policies.empty() ? std::string("static:1,2,3") : o.policies.front(), config);
    if (!std::holds_alternative<StaticPolicy>(static_policy.policy)) {
        throw ConfigError("transition needs a static policy for the pre-switch period");
    }
    const auto tr = transition_experiment(config.sim, static_policy.policy, dynamic_for(config), e.switch_day);
    out << "switch at quarter " << tr.switch_quarter + 1 << "; mean queue A/B:\n";
    const std::size_t Q = tr.sim_a.mean.size();
    const std::size_t sq = static_cast<std::size_t>(tr.switch_quarter);
    for (std::size_t q : {sq > 4 ? sq - 4 : 0, sq - 1, sq, sq + 1, sq + 4}) {
        if (q < Q) {
            out << "  q" << q + 1 << "  " << fixed(tr.sim_a.mean[q].mean_queue, 1) << "  "
                << fixed(tr.sim_b.mean[q].mean_queue, 1) << "\n";
        }
    }
    const std::filesystem::path dir(o.out_dir);
    write_atomic(dir / "transition_a.csv", transition_csv(config, tr.sim_a, config.sim.replications));
    write_atomic(dir / "transition_b.csv", transition_csv(config, tr.sim_b, config.sim.replications));
    return kExitOk;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Volunteer engagement control: solve thresholds and simulate policies"};
    app.require_subcommand(1);
    Options o;
    auto common = [&o](CLI::App* sub, bool policy) {
        sub->add_option("--config", o.config, "YAML configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", o.out_dir, "output directory")->check(CLI::ExistingDirectory);
        sub->add_option("--seed", o.seed, "override simulation seed");
        sub->add_option("--reps", o.reps, "override replication count");
        if (policy) {
            sub->add_option("--policy", o.policies, "static:<i,j,..> | dynamic | switch:<i,j,..>@<day>");
        }
    };
    auto* solve = app.add_subcommand("solve", "solve the Bellman problem; writes thresholds.csv");
    auto* simulate = app.add_subcommand("simulate", "simulate policies; writes report.csv");
    auto* sweep = app.add_subcommand("sweep", "abandonment-rate sweep; writes sweep.csv");
    auto* enumerate = app.add_subcommand("enumerate", "all static subsets; writes report.csv");
    auto* tune_cmd = app.add_subcommand("tune", "theta0 grid search; writes tune.csv");
    auto* transition = app.add_subcommand("transition", "static-to-dynamic switch; writes transition_{a,b}.csv");
    common(solve, false);
    common(simulate, true);
    common(sweep, false);
    sweep->add_flag("--tune", o.tune, "tune theta0 separately for each gamma");
    common(enumerate, false);
    common(tune_cmd, false);
    common(transition, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (solve->parsed()) return cmd_solve(o, out);
        if (simulate->parsed()) return cmd_simulate(o, out);
        if (sweep->parsed()) return cmd_sweep(o, out);
        if (enumerate->parsed()) return cmd_enumerate(o, out);
        if (tune_cmd->parsed()) return cmd_tune(o, out);
        if (transition->parsed()) return cmd_transition(o, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const SolverError& e) {
        err << "solver error: " << e.what()
            << "\n  hint: raise solver.x_max or loosen solver.tol_beta; check activity costs are distinct and "
               "ordered\n";
        return kExitSolver;
    } catch (const DomainError& e) {
        err << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const SimulationError& e) {
        err << "simulation error: " << e.what() << "\n";
        return kExitSimulation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}

}  // namespace engage
