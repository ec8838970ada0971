#include "engage/error.hpp"
#include "engage/params.hpp"

#include <doctest.h>

#include <cmath>

using namespace engage;

namespace {

// Straight from the raw calibration numbers, without the library's scaling code.
struct Oracle {
    double n = 56000.0;
    double mu = 78000.0;
    double k[2] = {11200.0, 16800.0};
    double r[2] = {0.60, 3.125};
    double lambda3 = 19540.0;
    double gamma = 0.01;

    double rho() const { return (k[0] * r[0] + k[1] * r[1] + lambda3) / mu; }
    double kappa() const {
        const double s = 1.0 / rho();
        const double total = k[0] * r[0] + k[1] * r[1] + lambda3;
        return (s * r[0] + gamma) * k[0] * r[0] / total + (s * r[1] + gamma) * k[1] * r[1] / total +
               gamma * lambda3 / total;
    }
};

double round_to(double v, int dp) {
    const double f = std::pow(10.0, dp);
    return std::round(v * f) / f;
}

}  // namespace

TEST_CASE("base case ladder reproduces the reference calibration") {
    const auto limit = scale_to_limit(base_case_params());
    LadderOptions opt;
    opt.theta0_override = -1.4;
    const auto lad = derive_ladder(limit, opt);
    const Oracle o;

    CHECK(lad.kappa == doctest::Approx(o.kappa()).epsilon(1e-12));
    CHECK(round_to(lad.kappa, 5) == doctest::Approx(2.12367));
    CHECK(round_to(lad.sigma2, 3) == doctest::Approx(1.436));
    CHECK(lad.sigma2 == doctest::Approx(2.0 / (o.mu / o.n)).epsilon(1e-12));

    // Input order: orientation, e-communication, speaking, tabling.
    const double eta[4] = {1.89315, 2.36643, 0.72813, 1.09220};
    const double F[4] = {3.96, 7.69, 3.04, 7.61};
    for (std::size_t r = 0; r < 4; ++r) {
        const auto a = lad.activity_order[r];
        CHECK(round_to(lad.eta[r], 5) == doctest::Approx(eta[a]));
        CHECK(round_to(lad.fixed_cost[r], 2) == doctest::Approx(F[a]));
    }
    CHECK(lad.activity_order == std::vector<std::size_t>{0, 1, 2, 3});
    const double c_hat[4] = {2.08929, 3.25, 4.17857, 6.96429};
    for (std::size_t r = 0; r < 4; ++r) {
        CHECK(round_to(lad.c_hat[r], 5) == doctest::Approx(c_hat[r]));
    }
    CHECK(lad.theta0_analytic == doctest::Approx(std::sqrt(o.n) * (o.rho() - 1.0)).epsilon(1e-10));
    CHECK(lad.theta.front() == -1.4);
}

TEST_CASE("theta0 override is required when the analytic value is not negative") {
    const auto limit = scale_to_limit(base_case_params());
    CHECK_THROWS_WITH_AS(derive_ladder(limit), doctest::Contains("supply a negative theta0 override"), ConfigError);
}

TEST_CASE("derived alpha balances the load exactly") {
    const auto limit = scale_to_limit(base_case_params());
    CHECK(balanced_load_check(limit) < 1e-12);
}

TEST_CASE("balanced_load_check on a constructed instance and on reference values") {
    LimitParams l;
    // r k-hat / mu = 0.5 and lambda / mu = 0.5.
    l.classes.push_back({"a", VolunteerKind::Repeat, 1.0, 1.0, 0.5, 0.0, 0.0, 0.0, 1.0});
    l.classes.push_back({"b", VolunteerKind::OneTime, 2.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0});
    CHECK(balanced_load_check(l) == doctest::Approx(0.0));

    // Reference limit values: r k / mu terms 0.12116 and 0.94655, lambda 0.35230, mu 1.393.
    l.classes[0].mu = 1.393;
    l.classes[0].r = 1.0;
    l.classes[0].k_hat = 0.12116 + 0.94655;
    l.classes[1].mu = 1.393;
    l.classes[1].lambda = 0.35230;
    CHECK(balanced_load_check(l) == doctest::Approx((0.12116 + 0.94655 + 0.35230) / 1.393 - 1.0).epsilon(1e-12));
    CHECK(balanced_load_check(l) == doctest::Approx(0.019).epsilon(0.05));
}

TEST_CASE("scale_to_limit and unscale are inverse") {
    auto p = base_case_params(0.013);
    const auto back = unscale(scale_to_limit(p));
    REQUIRE(back.classes.size() == p.classes.size());
    for (std::size_t j = 0; j < p.classes.size(); ++j) {
        CHECK(back.classes[j].population == doctest::Approx(p.classes[j].population).epsilon(1e-14));
        CHECK(back.classes[j].repose_exit_rate == doctest::Approx(p.classes[j].repose_exit_rate).epsilon(1e-14));
        CHECK(back.classes[j].arrival_rate == doctest::Approx(p.classes[j].arrival_rate).epsilon(1e-14));
        CHECK(back.classes[j].service_rate == doctest::Approx(p.classes[j].service_rate).epsilon(1e-14));
        CHECK(back.classes[j].abandonment_rate == p.classes[j].abandonment_rate);
    }
    for (std::size_t l = 0; l < p.activities.size(); ++l) {
        CHECK(back.activities[l].fixed_cost == doctest::Approx(p.activities[l].fixed_cost).epsilon(1e-14));
        for (std::size_t b = 0; b < p.activities[l].boosts.size(); ++b) {
            CHECK(back.activities[l].boosts[b].rate ==
                  doctest::Approx(p.activities[l].boosts[b].rate).epsilon(1e-14));
        }
    }
    CHECK_FALSE(back.alpha.has_value());

    p.alpha = std::vector<double>{0.0, 0.0, 0.0};
    const auto lim = scale_to_limit(p);
    CHECK(lim.alpha_supplied);
    CHECK(lim.classes[0].r == doctest::Approx(0.60));
    CHECK(unscale(lim).alpha.has_value());
}

TEST_CASE("scale_to_limit property: random valid instances round-trip") {
    std::uint64_t state = 12345;
    auto uniform = [&state](double lo, double hi) {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return lo + (hi - lo) * static_cast<double>(state >> 11) / 9007199254740992.0;
    };
    for (int trial = 0; trial < 50; ++trial) {
        NthSystemParams p;
        p.scaling_n = uniform(100.0, 1e6);
        p.idleness_penalty = uniform(1.0, 100.0);
        p.slots_per_day = 100;
        p.working_days_per_week = 5;
        const double mu = 100.0 * 5 * kWeeksPerYear;
        const double share = uniform(0.2, 0.8);
        const double load = uniform(0.96, 1.04) * mu;
        p.classes.push_back({"rep", VolunteerKind::Repeat, 1000.0, share * load / 1000.0, 0.0, 0.01, mu, share});
        p.classes.push_back({"one", VolunteerKind::OneTime, 0.0, 0.0, (1 - share) * load, 0.02, mu, 1 - share});
        p.activities.push_back(proportional_activity("a", p.classes, {0, 1}, uniform(1, 10), 52, uniform(10, 100)));
        const auto back = unscale(scale_to_limit(p));
        CHECK(back.classes[0].repose_exit_rate == doctest::Approx(p.classes[0].repose_exit_rate).epsilon(1e-12));
        CHECK(back.classes[1].arrival_rate == doctest::Approx(p.classes[1].arrival_rate).epsilon(1e-12));
        CHECK(balanced_load_check(scale_to_limit(p)) < 1e-12);
    }
}

TEST_CASE("validation diagnostics") {
    auto p = base_case_params();
    p.classes[1].abandonment_rate = -0.01;
    auto d = validate_nth_params(p);
    REQUIRE(d.size() == 1);
    CHECK(d[0].message == "abandonment_rate negative");
    CHECK(d[0].field == "classes[1].abandonment_rate");
    CHECK_THROWS_AS(scale_to_limit(p), ConfigError);

    p = base_case_params();
    p.classes[2].arrival_rate *= 1.5;
    d = validate_nth_params(p);
    REQUIRE_FALSE(d.empty());
    CHECK(d.back().message.find("exceeds 1.05 heavy-traffic band") != std::string::npos);

    p = base_case_params();
    p.classes[0].service_rate = 70000;
    CHECK_FALSE(validate_nth_params(p).empty());

    p = base_case_params();
    p.activities[0].boost_per_activation = 3.0;
    d = validate_nth_params(p);
    REQUIRE(d.size() == 1);
    CHECK(d[0].field == "activities[0].boost_per_activation");

    CHECK(validate_nth_params(base_case_params()).empty());
}

TEST_CASE("equal marginal costs name both activities") {
    auto p = base_case_params();
    p.activities[3] = proportional_activity("copy", p.classes, {0, 1, 2}, 2.0, 312.0, 936.0);
    LadderOptions opt;
    opt.theta0_override = -1.0;
    CHECK_THROWS_WITH_AS(derive_ladder(scale_to_limit(p), opt), doctest::Contains("'orientation' and 'copy'"),
                         ConfigError);
}

TEST_CASE("marginal cost at or above p is rejected") {
    auto p = base_case_params();
    p.activities[3].fixed_cost = 1800.0 * 10;
    LadderOptions opt;
    opt.theta0_override = -1.0;
    CHECK_THROWS_WITH_AS(derive_ladder(scale_to_limit(p), opt), doctest::Contains("can never be worth using"),
                         ConfigError);
}

TEST_CASE("ladder sorts rungs by marginal cost") {
    auto p = base_case_params();
    std::swap(p.activities[0], p.activities[3]);
    LadderOptions opt;
    opt.theta0_override = -1.0;
    const auto lad = derive_ladder(scale_to_limit(p), opt);
    CHECK(lad.activity_order == std::vector<std::size_t>{3, 1, 2, 0});
    for (std::size_t r = 1; r < lad.rungs(); ++r) {
        CHECK(lad.c_hat[r - 1] < lad.c_hat[r]);
        CHECK(lad.theta[r + 1] == doctest::Approx(lad.theta[r] + lad.eta[r]));
    }
}

TEST_CASE("annualized gamma only changes kappa") {
    const auto limit = scale_to_limit(base_case_params());
    LadderOptions a;
    a.theta0_override = -1.0;
    LadderOptions b = a;
    b.annualize_gamma = true;
    const auto la = derive_ladder(limit, a);
    const auto lb = derive_ladder(limit, b);
    CHECK(lb.kappa - la.kappa == doctest::Approx(0.01 * 363.0));
    CHECK(lb.sigma2 == la.sigma2);
}

TEST_CASE("from_rungs validates") {
    CHECK_NOTHROW(DriftLadder::from_rungs(-1.0, {1.0, 1.0}, {1.0, 2.0}, 1.0, 1.0, 10.0));
    CHECK_THROWS_AS(DriftLadder::from_rungs(0.5, {1.0}, {1.0}, 1.0, 1.0, 10.0), ConfigError);
    CHECK_THROWS_AS(DriftLadder::from_rungs(-1.0, {1.0, 1.0}, {2.0, 1.0}, 1.0, 1.0, 10.0), ConfigError);
    CHECK_THROWS_AS(DriftLadder::from_rungs(-1.0, {1.0}, {11.0}, 1.0, 1.0, 10.0), ConfigError);
}
