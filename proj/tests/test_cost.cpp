#include "engage/cost.hpp"
#include "engage/error.hpp"
#include "engage/special.hpp"

#include <doctest.h>

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <random>

using namespace engage;

namespace {

DriftLadder base_ladder() {
    LadderOptions opt;
    opt.theta0_override = -1.4;
    return derive_ladder(scale_to_limit(base_case_params()), opt);
}

// c(x) by linear interpolation of the ladder nodes.
double interp_cost(const DriftLadder& lad, double x) {
    for (std::size_t i = 1; i < lad.theta.size(); ++i) {
        if (x <= lad.theta[i]) {
            const double t = (x - lad.theta[i - 1]) / (lad.theta[i] - lad.theta[i - 1]);
            return lad.cost_at_theta[i - 1] + t * (lad.cost_at_theta[i] - lad.cost_at_theta[i - 1]);
        }
    }
    return lad.cost_at_theta.back();
}

double node_phi(const DriftLadder& lad, double y) {
    double best = -INFINITY;
    for (std::size_t i = 0; i < lad.theta.size(); ++i) {
        best = std::max(best, y * lad.theta[i] - lad.cost_at_theta[i]);
    }
    return best;
}

struct Brute {
    double phi;
    double argmax;
};

// Grid maximization of y x - c(x) on a 1e-4 grid plus the ladder nodes.
Brute brute_phi(const DriftLadder& lad, double y) {
    std::vector<double> xs(lad.theta.begin(), lad.theta.end());
    for (double x = lad.theta.front(); x < lad.theta.back(); x += 1e-4) {
        xs.push_back(x);
    }
    std::sort(xs.begin(), xs.end());
    Brute best{-INFINITY, 0.0};
    for (double x : xs) {
        const double v = y * x - interp_cost(lad, x);
        if (v > best.phi + 1e-13) {
            best = {v, x};
        }
    }
    return best;
}

// Integral of the step function psi from 0 to y >= 0, summed segment by segment.
double integral_psi(const DriftLadder& lad, double y) {
    double total = 0.0;
    double left = 0.0;
    for (std::size_t m = 0; m <= lad.rungs() && left < y; ++m) {
        const double right = m < lad.rungs() ? std::min(y, lad.c_hat[m]) : y;
        if (right > left) {
            total += lad.theta[m] * (right - left);
            left = right;
        }
    }
    return total;
}

}  // namespace

TEST_CASE("cost_c is exact at nodes and rejects points off the ladder") {
    const auto lad = base_ladder();
    for (std::size_t i = 0; i < lad.theta.size(); ++i) {
        CHECK(cost_c(lad, lad.theta[i]) == lad.cost_at_theta[i]);
    }
    CHECK_THROWS_AS(cost_c(lad, lad.theta.front() - 1e-9), DomainError);
    CHECK_THROWS_AS(cost_c(lad, lad.theta.back() + 1e-9), DomainError);
    const double mid = 0.5 * (lad.theta[1] + lad.theta[2]);
    CHECK(cost_c(lad, mid) == doctest::Approx(interp_cost(lad, mid)).epsilon(1e-14));
}

TEST_CASE("phi and psi agree with brute-force maximization") {
    const auto lad = base_ladder();
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> dist(-2.0, lad.c_hat.back() + 3.0);
    for (int i = 0; i < 200; ++i) {
        const double y = dist(rng);
        const auto b = brute_phi(lad, y);
        CHECK(conjugate_phi(lad, y) == doctest::Approx(b.phi).epsilon(1e-9));
        CHECK(std::abs(conjugate_phi(lad, y) - b.phi) < 1e-9);
        CHECK(psi_min_argmax(lad, y) == doctest::Approx(b.argmax).epsilon(1e-12));
    }
}

TEST_CASE("phi is the integral of psi") {
    const auto lad = base_ladder();
    CHECK(conjugate_phi(lad, 0.0) == 0.0);
    const double top = lad.c_hat.back() + 2.0;
    for (int i = 0; i <= 1000; ++i) {
        const double y = top * i / 1000.0;
        CHECK(std::abs(conjugate_phi(lad, y) - integral_psi(lad, y)) < 1e-12);
    }
}

TEST_CASE("psi is left-continuous at the marginal costs") {
    const auto lad = base_ladder();
    for (std::size_t m = 0; m < lad.rungs(); ++m) {
        CHECK(psi_index(lad, lad.c_hat[m]) == m);
        CHECK(psi_index(lad, std::nextafter(lad.c_hat[m], INFINITY)) == m + 1);
    }
    CHECK(psi_index(lad, -5.0) == 0);
    CHECK(psi_index(lad, 1e6) == lad.rungs());
}

TEST_CASE("beta lower bound") {
    const auto lad = base_ladder();
    double lowest = conjugate_phi(lad, 0.0);
    std::vector<double> ys(lad.c_hat.begin(), lad.c_hat.end());
    for (double y = -1.0; y < 10.0; y += 1e-4) {
        ys.push_back(y);
    }
    for (double y : ys) {
        lowest = std::min(lowest, node_phi(lad, y));
    }
    CHECK(beta_lower_bound(lad) == doctest::Approx(-lowest).epsilon(1e-9));

    const auto positive = DriftLadder::from_rungs(-1.0, {0.5}, {1.0}, 1.0, 1.0, 10.0);
    CHECK_THROWS_AS(beta_lower_bound(positive), DomainError);
}

TEST_CASE("erfcx matches exp(z^2) erfc(z) and its asymptotics") {
    for (double z = -5.0; z <= 20.0; z += 0.125) {
        const double ref = std::exp(z * z) * boost::math::erfc(z);
        CHECK(erfcx(z) == doctest::Approx(ref).epsilon(1e-13));
    }
    for (double z : {100.0, 1e4, 1e8}) {
        // 1/(z sqrt(pi)) (1 - 1/(2z^2) + 3/(4z^4))
        const double ref = 1.0 / (z * std::sqrt(M_PI)) * (1.0 - 0.5 / (z * z) + 0.75 / std::pow(z, 4));
        CHECK(erfcx(z) == doctest::Approx(ref).epsilon(1e-12));
    }
    CHECK(std::isfinite(erfcx(-26.0)));
}
