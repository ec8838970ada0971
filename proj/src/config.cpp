#include "engage/config.hpp"

#include "engage/error.hpp"

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace engage {

namespace {

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& at, const std::string& message) const {
        const auto mark = at.Mark();
        if (mark.line >= 0) {
            throw ConfigError(source_ + ":" + std::to_string(mark.line + 1) + ": " + message);
        }
        throw ConfigError(source_ + ": " + message);
    }

    /// Rejects keys outside `allowed`; a known stem with the wrong unit
    /// suffix is reported as a unit mismatch.
    void check_keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& where) const {
        if (!map.IsMap()) {
            fail(map, where + " must be a mapping");
        }
        for (const auto& kv : map) {
            const auto key = kv.first.as<std::string>();
            if (allowed.count(key)) {
                continue;
            }
            const auto stem = key.substr(0, key.find("_per_"));
            for (const auto& a : allowed) {
                if (stem != key && a.substr(0, a.find("_per_")) == stem) {
                    fail(kv.first, "unit mismatch in " + where + ": '" + key + "' (expected '" + a + "')");
                }
            }
            fail(kv.first, "unknown key in " + where + ": '" + key + "'");
        }
    }

    template <typename T>
    T get(const YAML::Node& map, const std::string& key) const {
        const auto node = map[key];
        if (!node) {
            fail(map, "missing key: " + key);
        }
        return as<T>(node, key);
    }

    template <typename T>
    T get_or(const YAML::Node& map, const std::string& key, T fallback) const {
        const auto node = map[key];
        return node ? as<T>(node, key) : fallback;
    }

    template <typename T>
    T as(const YAML::Node& node, const std::string& key) const {
        try {
            return node.as<T>();
        } catch (const YAML::Exception&) {
            fail(node, "bad value for " + key);
        }
    }

private:
    std::string source_;
};

std::string num(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, res.ptr);
    if (s.find_first_of(".eE") == std::string::npos && s.find("inf") == std::string::npos &&
        s.find("nan") == std::string::npos) {
        s += ".0";
    }
    return s;
}

std::string list(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += (i ? ", " : "") + num(v[i]);
    }
    return s + "]";
}

std::size_t class_index(const Reader& r, const YAML::Node& at, const std::vector<VolunteerClass>& classes,
                        const std::string& name) {
    for (std::size_t j = 0; j < classes.size(); ++j) {
        if (classes[j].name == name) {
            return j;
        }
    }
    r.fail(at, "unknown class: " + name);
}

void parse_classes(const Reader& r, const YAML::Node& node, RunConfig& out) {
    if (!node.IsSequence() || node.size() == 0) {
        r.fail(node, "classes must be a non-empty list");
    }
    const std::set<std::string> keys = {"name",        "kind",          "population", "repose_exit_rate_per_year",
                                        "arrival_rate_per_year", "gamma_per_day", "service_rate_per_year",
                                        "mix_weight",  "alpha"};
    std::size_t with_mix = 0;
    std::size_t with_alpha = 0;
    std::vector<double> alpha;
    for (const auto& c : node) {
        r.check_keys(c, keys, "classes");
        VolunteerClass v;
        v.name = r.get<std::string>(c, "name");
        for (const auto& prev : out.params.classes) {
            if (prev.name == v.name) {
                r.fail(c, "duplicate class name: " + v.name);
            }
        }
        const auto kind = r.get<std::string>(c, "kind");
        if (kind == "repeat") {
            v.kind = VolunteerKind::Repeat;
            v.population = r.get<double>(c, "population");
            v.repose_exit_rate = r.get<double>(c, "repose_exit_rate_per_year");
            if (c["arrival_rate_per_year"]) {
                r.fail(c["arrival_rate_per_year"], "repeat class takes population and repose_exit_rate_per_year");
            }
        } else if (kind == "one_time") {
            v.kind = VolunteerKind::OneTime;
            v.arrival_rate = r.get<double>(c, "arrival_rate_per_year");
            if (c["population"] || c["repose_exit_rate_per_year"]) {
                r.fail(c, "one-time class takes arrival_rate_per_year only");
            }
        } else {
            r.fail(c["kind"], "kind must be repeat or one_time");
        }
        v.abandonment_rate = r.get<double>(c, "gamma_per_day");
        v.service_rate = r.get<double>(c, "service_rate_per_year");
        if (c["mix_weight"]) {
            v.mix_weight = r.get<double>(c, "mix_weight");
            ++with_mix;
        }
        if (c["alpha"]) {
            alpha.push_back(r.get<double>(c, "alpha"));
            ++with_alpha;
        }
        out.params.classes.push_back(v);
    }
    const std::size_t J = out.params.classes.size();
    if (with_mix != 0 && with_mix != J) {
        r.fail(node, "mix_weight must be given for every class or none");
    }
    if (with_mix == 0) {
        const double total = out.params.total_annual_arrivals();
        for (auto& c : out.params.classes) {
            c.mix_weight = total > 0.0 ? c.annual_arrivals() / total : 0.0;
        }
    }
    if (with_alpha != 0 && with_alpha != J) {
        r.fail(node, "alpha must be given for every class or none");
    }
    if (with_alpha == J) {
        out.params.alpha = alpha;
    }
}

void parse_activities(const Reader& r, const YAML::Node& node, RunConfig& out) {
    if (!node.IsSequence()) {
        r.fail(node, "activities must be a list");
    }
    const std::set<std::string> keys = {"name",      "targets", "boosts", "boost_per_activation",
                                        "frequency_per_year", "fixed_cost_per_year"};
    const auto& classes = out.params.classes;
    for (const auto& a : node) {
        r.check_keys(a, keys, "activities");
        const auto name = r.get<std::string>(a, "name");
        const auto per = r.get<double>(a, "boost_per_activation");
        const auto freq = r.get<double>(a, "frequency_per_year");
        const auto cost = r.get<double>(a, "fixed_cost_per_year");
        if (!(freq > 0.0)) {
            r.fail(a["frequency_per_year"], "frequency_per_year must be positive");
        }
        if (a["targets"] && a["boosts"]) {
            r.fail(a, "activity '" + name + "' sets both targets and boosts");
        }
        EngagementActivity act;
        if (a["targets"]) {
            std::vector<std::size_t> targets;
            for (const auto& t : a["targets"]) {
                targets.push_back(class_index(r, t, classes, r.as<std::string>(t, "targets")));
            }
            try {
                act = proportional_activity(name, classes, targets, per, freq, cost);
            } catch (const ConfigError& e) {
                r.fail(a, e.what());
            }
        } else if (a["boosts"]) {
            act.name = name;
            act.boost_per_activation = per;
            act.schedule_frequency = freq;
            act.fixed_cost = cost;
            for (const auto& b : a["boosts"]) {
                r.check_keys(b, {"class", "rate_per_year"}, "boosts");
                act.boosts.push_back({class_index(r, b, classes, r.get<std::string>(b, "class")),
                                      r.get<double>(b, "rate_per_year")});
            }
        } else {
            r.fail(a, "activity '" + name + "' needs targets or boosts");
        }
        out.params.activities.push_back(act);
    }
}

void parse_simulation(const Reader& r, const YAML::Node& s, RunConfig& out) {
    r.check_keys(s,
                 {"idleness_penalty_per_slot", "slots_per_day", "working_days_per_week", "horizon_years",
                  "warmup_years", "measure_years", "replications", "seed", "slots", "abandonment", "crn",
                  "arrival_days", "discipline", "thinning", "base_rates", "threads"},
                 "simulation");
    auto& p = out.params;
    auto& c = out.sim;
    p.idleness_penalty = r.get<double>(s, "idleness_penalty_per_slot");
    p.slots_per_day = r.get<int>(s, "slots_per_day");
    p.working_days_per_week = r.get_or<int>(s, "working_days_per_week", 6);
    c.horizon_years = r.get_or<int>(s, "horizon_years", c.horizon_years);
    c.warmup_years = r.get_or<int>(s, "warmup_years", c.warmup_years);
    c.measure_years = r.get_or<int>(s, "measure_years", c.measure_years);
    c.replications = r.get_or<int>(s, "replications", c.replications);
    c.seed = r.get_or<std::uint64_t>(s, "seed", c.seed);
    c.crn = r.get_or<bool>(s, "crn", c.crn);
    c.thinning = r.get_or<bool>(s, "thinning", c.thinning);
    c.threads = r.get_or<unsigned>(s, "threads", c.threads);
    c.slots = FixedSlots{p.slots_per_day};

    if (const auto slots = s["slots"]) {
        r.check_keys(slots, {"model", "values"}, "slots");
        const auto model = r.get<std::string>(slots, "model");
        if (model == "fixed") {
            if (slots["values"]) {
                r.fail(slots["values"], "fixed slots take no values");
            }
        } else if (model == "discrete3") {
            const auto v = r.get<std::vector<int>>(slots, "values");
            if (v.size() != 3) {
                r.fail(slots["values"], "discrete3 slots need three values");
            }
            c.slots = Discrete3Slots{v[0], v[1], v[2]};
        } else {
            r.fail(slots["model"], "slots model must be fixed or discrete3");
        }
    }
    if (const auto ab = s["abandonment"]) {
        r.check_keys(ab, {"model", "shape", "rate_per_day"}, "abandonment");
        const auto model = r.get<std::string>(ab, "model");
        if (model == "exponential") {
            c.abandon = ExponentialAbandon{};
        } else if (model == "gamma") {
            GammaAbandon g;
            g.shape = r.get<double>(ab, "shape");
            if (ab["rate_per_day"]) {
                g.rate_per_day = r.get<double>(ab, "rate_per_day");
            }
            c.abandon = g;
        } else {
            r.fail(ab["model"], "abandonment model must be exponential or gamma");
        }
    }
    auto choice = [&](const std::string& key, const std::vector<std::string>& names, int fallback) {
        if (!s[key]) {
            return fallback;
        }
        const auto v = r.get<std::string>(s, key);
        const auto it = std::find(names.begin(), names.end(), v);
        if (it == names.end()) {
            r.fail(s[key], "bad value for " + key + ": " + v);
        }
        return static_cast<int>(it - names.begin());
    };
    c.arrival_days = static_cast<ArrivalDays>(choice("arrival_days", {"calendar", "working"}, 0));
    c.discipline = static_cast<ServiceDiscipline>(choice("discipline", {"fcfs", "penalty"}, 0));
    c.base_rates = static_cast<BaseRates>(choice("base_rates", {"raw", "balanced"}, 1));
}

void parse_solver(const Reader& r, const YAML::Node& s, RunConfig& out) {
    r.check_keys(s,
                 {"scaling_n", "theta0", "annualize_gamma", "x_max", "tol_beta", "tol_terminal", "root_tol", "step",
                  "samples", "max_escalations"},
                 "solver");
    out.params.scaling_n = r.get<double>(s, "scaling_n");
    if (s["theta0"]) {
        out.ladder.theta0_override = r.get<double>(s, "theta0");
    }
    out.ladder.annualize_gamma = r.get_or<bool>(s, "annualize_gamma", false);
    auto& o = out.solver;
    if (s["x_max"]) o.x_max = r.get<double>(s, "x_max");
    if (s["tol_beta"]) o.tol_beta = r.get<double>(s, "tol_beta");
    if (s["tol_terminal"]) o.tol_terminal = r.get<double>(s, "tol_terminal");
    o.root_tol = r.get_or<double>(s, "root_tol", o.root_tol);
    o.step = r.get_or<double>(s, "step", o.step);
    o.samples = r.get_or<std::size_t>(s, "samples", o.samples);
    o.max_escalations = r.get_or<int>(s, "max_escalations", o.max_escalations);
}

void parse_experiment(const Reader& r, const YAML::Node& s, RunConfig& out) {
    r.check_keys(s,
                 {"gammas_per_day", "theta0_grid", "tune_replications", "tune_seed", "switch_day",
                  "transition_replications", "transition_horizon_years"},
                 "experiment");
    auto& e = out.experiment;
    e.gammas_per_day = r.get_or(s, "gammas_per_day", e.gammas_per_day);
    e.theta0_grid = r.get_or(s, "theta0_grid", e.theta0_grid);
    e.tune_replications = r.get_or(s, "tune_replications", e.tune_replications);
    e.tune_seed = r.get_or(s, "tune_seed", e.tune_seed);
    e.switch_day = r.get_or(s, "switch_day", e.switch_day);
    e.transition_replications = r.get_or(s, "transition_replications", e.transition_replications);
    e.transition_horizon_years = r.get_or(s, "transition_horizon_years", e.transition_horizon_years);
    if (e.switch_day % kDaysPerQuarter != 0) {
        r.fail(s["switch_day"], "switch_day must be a multiple of " + std::to_string(kDaysPerQuarter));
    }
}

}  // namespace

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw ConfigError("sha256 failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

RunConfig parse_config_text(const std::string& text, const std::string& source_name) {
    const Reader r(source_name);
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(source_name + ":" + std::to_string(e.mark.line + 1) + ": malformed: " + e.msg);
    }
    if (!root || root.IsNull()) {
        throw ConfigError(source_name + ": missing section: classes");
    }
    r.check_keys(root, {"classes", "activities", "simulation", "solver", "experiment"}, "top level");
    for (const char* section : {"classes", "activities", "simulation", "solver"}) {
        if (!root[section]) {
            r.fail(root, std::string("missing section: ") + section);
        }
    }

    RunConfig out;
    out.source_path = source_name;
    out.hash = sha256_hex(text);
    parse_classes(r, root["classes"], out);
    parse_activities(r, root["activities"], out);
    parse_simulation(r, root["simulation"], out);
    parse_solver(r, root["solver"], out);
    if (root["experiment"]) {
        parse_experiment(r, root["experiment"], out);
    }

    const auto diags = validate_nth_params(out.params);
    if (!diags.empty()) {
        std::string msg = "invalid parameters:";
        for (const auto& d : diags) {
            msg += "\n  " + d.field + ": " + d.message + " (expected " + d.expected + ", got " + d.actual + ")";
        }
        r.fail(root, msg);
    }
    out.sim.params = out.params;
    try {
        validate_sim_config(out.sim);
    } catch (const SimulationError& e) {
        r.fail(root["simulation"], e.what());
    }
    return out;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError(path + ": cannot open");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

std::string serialize_config(const RunConfig& config) {
    const auto& p = config.params;
    const auto& s = config.sim;
    std::ostringstream os;
    os << "classes:\n";
    for (std::size_t j = 0; j < p.classes.size(); ++j) {
        const auto& c = p.classes[j];
        os << "  - name: " << c.name << "\n";
        if (c.kind == VolunteerKind::Repeat) {
            os << "    kind: repeat\n    population: " << num(c.population)
               << "\n    repose_exit_rate_per_year: " << num(c.repose_exit_rate) << "\n";
        } else {
            os << "    kind: one_time\n    arrival_rate_per_year: " << num(c.arrival_rate) << "\n";
        }
        os << "    gamma_per_day: " << num(c.abandonment_rate) << "\n";
        os << "    service_rate_per_year: " << num(c.service_rate) << "\n";
        os << "    mix_weight: " << num(c.mix_weight) << "\n";
        if (p.alpha) {
            os << "    alpha: " << num((*p.alpha)[j]) << "\n";
        }
    }
    os << "activities:\n";
    for (const auto& a : p.activities) {
        os << "  - name: " << a.name << "\n    boosts:\n";
        for (const auto& b : a.boosts) {
            os << "      - {class: " << p.classes[b.class_index].name << ", rate_per_year: " << num(b.rate) << "}\n";
        }
        os << "    boost_per_activation: " << num(a.boost_per_activation) << "\n";
        os << "    frequency_per_year: " << num(a.schedule_frequency) << "\n";
        os << "    fixed_cost_per_year: " << num(a.fixed_cost) << "\n";
    }
    os << "simulation:\n";
    os << "  idleness_penalty_per_slot: " << num(p.idleness_penalty) << "\n";
    os << "  slots_per_day: " << p.slots_per_day << "\n";
    os << "  working_days_per_week: " << p.working_days_per_week << "\n";
    os << "  horizon_years: " << s.horizon_years << "\n";
    os << "  warmup_years: " << s.warmup_years << "\n";
    os << "  measure_years: " << s.measure_years << "\n";
    os << "  replications: " << s.replications << "\n";
    os << "  seed: " << s.seed << "\n";
    if (const auto* d3 = std::get_if<Discrete3Slots>(&s.slots)) {
        os << "  slots: {model: discrete3, values: [" << d3->a1 << ", " << d3->a2 << ", " << d3->a3 << "]}\n";
    } else {
        os << "  slots: {model: fixed}\n";
    }
    if (const auto* g = std::get_if<GammaAbandon>(&s.abandon)) {
        os << "  abandonment: {model: gamma, shape: " << num(g->shape);
        if (g->rate_per_day) {
            os << ", rate_per_day: " << num(*g->rate_per_day);
        }
        os << "}\n";
    } else {
        os << "  abandonment: {model: exponential}\n";
    }
    os << "  crn: " << (s.crn ? "true" : "false") << "\n";
    os << "  arrival_days: " << (s.arrival_days == ArrivalDays::Calendar ? "calendar" : "working") << "\n";
    os << "  discipline: " << (s.discipline == ServiceDiscipline::Fcfs ? "fcfs" : "penalty") << "\n";
    os << "  thinning: " << (s.thinning ? "true" : "false") << "\n";
    os << "  base_rates: " << (s.base_rates == BaseRates::Raw ? "raw" : "balanced") << "\n";
    os << "  threads: " << s.threads << "\n";

    const auto& o = config.solver;
    os << "solver:\n";
    os << "  scaling_n: " << num(p.scaling_n) << "\n";
    if (config.ladder.theta0_override) {
        os << "  theta0: " << num(*config.ladder.theta0_override) << "\n";
    }
    os << "  annualize_gamma: " << (config.ladder.annualize_gamma ? "true" : "false") << "\n";
    if (o.x_max) os << "  x_max: " << num(*o.x_max) << "\n";
    if (o.tol_beta) os << "  tol_beta: " << num(*o.tol_beta) << "\n";
    if (o.tol_terminal) os << "  tol_terminal: " << num(*o.tol_terminal) << "\n";
    os << "  root_tol: " << num(o.root_tol) << "\n";
    os << "  step: " << num(o.step) << "\n";
    os << "  samples: " << o.samples << "\n";
    os << "  max_escalations: " << o.max_escalations << "\n";

    const auto& e = config.experiment;
    os << "experiment:\n";
    os << "  gammas_per_day: " << list(e.gammas_per_day) << "\n";
    os << "  theta0_grid: " << list(e.theta0_grid) << "\n";
    os << "  tune_replications: " << e.tune_replications << "\n";
    os << "  tune_seed: " << e.tune_seed << "\n";
    os << "  switch_day: " << e.switch_day << "\n";
    os << "  transition_replications: " << e.transition_replications << "\n";
    os << "  transition_horizon_years: " << e.transition_horizon_years << "\n";
    return os.str();
}

}  // namespace engage
