#include "engage/bellman.hpp"

#include "engage/cost.hpp"
#include "engage/error.hpp"
#include "engage/special.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace engage {

namespace {

struct PieceConstants {
    double theta;
    double cost;
    double c_hat;
    double sigma;
    double s;      // sigma sqrt(kappa / 2)
    double K;      // 2 (beta - c) sqrt(pi) / (sigma sqrt(kappa))
};

PieceConstants piece_constants(const DriftLadder& ladder, std::size_t l, double beta) {
    const std::size_t L = ladder.rungs();
    if (l < 1 || l > L + 1) {
        throw DomainError("piece index " + std::to_string(l) + " outside 1.." + std::to_string(L + 1));
    }
    PieceConstants pc{};
    pc.theta = ladder.theta[l - 1];
    pc.cost = ladder.cost_at_theta[l - 1];
    pc.c_hat = l <= L ? ladder.c_hat[l - 1] : ladder.penalty;
    pc.sigma = std::sqrt(ladder.sigma2);
    pc.s = pc.sigma * std::sqrt(ladder.kappa / 2.0);
    pc.K = 2.0 * (beta - pc.cost) * std::sqrt(std::numbers::pi) / (pc.sigma * std::sqrt(ladder.kappa));
    return pc;
}

// exp((a^2 - b^2) / 2) in the original variables, written to avoid cancellation.
double growth_exponent(const DriftLadder& ladder, double theta, double x, double tau) {
    return (x - tau) * (ladder.kappa * (x + tau) - 2.0 * theta) / ladder.sigma2;
}

double growth_coefficient(const PieceConstants& pc, double b) {
    return pc.c_hat - 0.5 * pc.K * erfcx(b / std::numbers::sqrt2);
}

void check_piece_domain(double x, double tau_l) {
    if (x < tau_l) {
        throw DomainError("u_piece: x = " + std::to_string(x) + " below tau_l = " + std::to_string(tau_l));
    }
}

}  // namespace

double ode_rhs(const DriftLadder& ladder, double beta, double x, double v) {
    const double w = ladder.penalty - v;
    return 2.0 / ladder.sigma2 * (beta - ladder.kappa * x * w + conjugate_phi(ladder, w));
}

Trajectory integrate_v(const DriftLadder& ladder, double beta, double x_max, double step) {
    if (!(x_max > 0.0) || !(step > 0.0)) {
        throw SolverError("integrate_v needs x_max > 0 and step > 0");
    }
    Trajectory tr;
    const auto steps = static_cast<std::size_t>(std::ceil(x_max / step - 1e-9));
    tr.x.reserve(steps + 1);
    tr.v.reserve(steps + 1);
    double v = 0.0;
    for (std::size_t i = 0;; ++i) {
        const double x = i == steps ? x_max : static_cast<double>(i) * step;
        tr.x.push_back(x);
        tr.v.push_back(v);
        if (!std::isfinite(v)) {
            throw SolverError("integrate_v: state overflowed at x = " + std::to_string(x));
        }
        if (v >= ladder.penalty) {
            tr.reached_p_at = x;
            break;
        }
        const double k1 = ode_rhs(ladder, beta, x, v);
        if (v < 0.0 || k1 < 0.0) {
            tr.crossed_negative_slope_at = x;
            break;
        }
        if (i == steps) {
            break;
        }
        const double h = (i + 1 == steps ? x_max : static_cast<double>(i + 1) * step) - x;
        const double k2 = ode_rhs(ladder, beta, x + h / 2, v + h / 2 * k1);
        const double k3 = ode_rhs(ladder, beta, x + h / 2, v + h / 2 * k2);
        const double k4 = ode_rhs(ladder, beta, x + h, v + h * k3);
        v += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return tr;
}

BetaClass classify_beta(const DriftLadder& ladder, double beta, double x_max, double tol, double step) {
    const auto tr = integrate_v(ladder, beta, x_max, step);
    if (tr.crossed_negative_slope_at) {
        return BetaClass::D;
    }
    if (tr.reached_p_at) {
        return BetaClass::I_unbounded;
    }
    const double gap = std::abs(tr.v.back() - ladder.penalty);
    if (gap <= tol) {
        return BetaClass::Boundary;
    }
    throw SolverError("indeterminate classification at beta = " + std::to_string(beta) + ": terminal gap " +
                      std::to_string(gap) + " at x_max = " + std::to_string(x_max) + "; raise x_max");
}

double u_piece(const DriftLadder& ladder, std::size_t l, double x, double tau_l, double beta, PieceBranch branch) {
    check_piece_domain(x, tau_l);
    const auto pc = piece_constants(ladder, l, beta);
    const double a = (ladder.kappa * x - pc.theta) / pc.s;
    const double tail = 0.5 * pc.K * erfcx(a / std::numbers::sqrt2);
    double u = ladder.penalty - tail;
    if (branch == PieceBranch::Full) {
        const double b = (ladder.kappa * tau_l - pc.theta) / pc.s;
        const double g = growth_coefficient(pc, b);
        if (g != 0.0) {
            u -= g * std::exp(growth_exponent(ladder, pc.theta, x, tau_l));
        }
    }
    if (!std::isfinite(u)) {
        throw DomainError("u_piece overflow at x = " + std::to_string(x));
    }
    return u;
}

double u_piece_derivative(const DriftLadder& ladder, std::size_t l, double x, double tau_l, double beta,
                          PieceBranch branch) {
    check_piece_domain(x, tau_l);
    const auto pc = piece_constants(ladder, l, beta);
    const double a = (ladder.kappa * x - pc.theta) / pc.s;
    const double da = ladder.kappa / pc.s;
    double du = 0.5 * pc.K * da * (std::sqrt(2.0 / std::numbers::pi) - a * erfcx(a / std::numbers::sqrt2));
    if (branch == PieceBranch::Full) {
        const double b = (ladder.kappa * tau_l - pc.theta) / pc.s;
        const double g = growth_coefficient(pc, b);
        if (g != 0.0) {
            du -= g * a * da * std::exp(growth_exponent(ladder, pc.theta, x, tau_l));
        }
    }
    if (!std::isfinite(du)) {
        throw DomainError("u_piece_derivative overflow at x = " + std::to_string(x));
    }
    return du;
}

namespace {

struct Chain {
    BetaClass cls = BetaClass::D;
    std::vector<double> tau;
    std::size_t failed_rung = 0;  // rung whose threshold was not reached, when D
};

// Closed-form shooting: thresholds from tau_{L+1} = 0 upward, then the sign
// of the growing-mode coefficient above tau_1 says which side of beta* we are.
Chain run_chain(const DriftLadder& ladder, double beta, double x_max, double root_tol) {
    const std::size_t L = ladder.rungs();
    Chain out;
    out.tau.assign(L, 0.0);
    double start = 0.0;
    for (std::size_t l = L + 1; l >= 2; --l) {
        const double target = ladder.penalty - ladder.c_hat[l - 2];
        auto f = [&](double x) { return u_piece(ladder, l, x, start, beta) - target; };
        // March in small fixed steps: past the root the growing mode can turn
        // u back down, so a doubling bracket may step over the crossing.
        constexpr double kScan = 0.02;
        double lo = start;
        double hi = start + kScan;
        try {
            while (f(hi) < 0.0) {
                if (u_piece_derivative(ladder, l, hi, start, beta) < 0.0 || hi + kScan > x_max) {
                    out.failed_rung = l - 1;
                    return out;
                }
                lo = hi;
                hi += kScan;
            }
            while (hi - lo > root_tol) {
                const double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi) {
                    break;
                }
                (f(mid) < 0.0 ? lo : hi) = mid;
            }
        } catch (const DomainError&) {
            out.failed_rung = l - 1;
            return out;
        }
        start = 0.5 * (lo + hi);
        out.tau[l - 2] = start;
    }
    const auto pc = piece_constants(ladder, 1, beta);
    const double g = growth_coefficient(pc, (ladder.kappa * start - pc.theta) / pc.s);
    out.cls = g > 0.0 ? BetaClass::D : g < 0.0 ? BetaClass::I_unbounded : BetaClass::Boundary;
    return out;
}

}  // namespace

std::vector<double> extract_thresholds(const DriftLadder& ladder, double beta, double x_max, double root_tol) {
    auto chain = run_chain(ladder, beta, x_max, root_tol);
    if (chain.failed_rung != 0) {
        throw SolverError("cannot reach tau_" + std::to_string(chain.failed_rung) + " below x = " +
                          std::to_string(x_max) + "; beta* tolerance too loose");
    }
    return chain.tau;
}

double beta_upper_seed(const DriftLadder& ladder, double margin) {
    const double q = ladder.kappa / ladder.sigma2;
    // alpha = int_0^1 exp(-q s^2) ds
    const double alpha = 0.5 * std::sqrt(std::numbers::pi) * std::erf(std::sqrt(q)) / std::sqrt(q);
    return beta_lower_bound(ladder) + ladder.sigma2 * ladder.penalty / (2.0 * alpha) + margin;
}

std::size_t BellmanSolution::piece_at(double x) const {
    for (std::size_t i = 0; i < tau.size(); ++i) {
        if (x >= tau[i]) {
            return i + 1;
        }
    }
    return tau.size() + 1;
}

double BellmanSolution::value(const DriftLadder& ladder, double x) const {
    const auto l = piece_at(x);
    const auto branch = (l == 1 && x > tau.front()) ? PieceBranch::Far : PieceBranch::Full;
    return u_piece(ladder, l, x, pieces[l - 1].tau, beta_star, branch);
}

double BellmanSolution::derivative(const DriftLadder& ladder, double x) const {
    const auto l = piece_at(x);
    const auto branch = (l == 1 && x > tau.front()) ? PieceBranch::Far : PieceBranch::Full;
    return u_piece_derivative(ladder, l, x, pieces[l - 1].tau, beta_star, branch);
}

BellmanSolution solve_beta_star(const DriftLadder& ladder, const SolverOptions& options) {
    const double p = ladder.penalty;
    const double tol_beta = options.tol_beta.value_or(1e-8 * p);
    const double tol_terminal = options.tol_terminal.value_or(1e-3 * p);

    BellmanSolution sol;
    sol.beta_lower = beta_lower_bound(ladder);
    sol.beta_upper_seed = beta_upper_seed(ladder);

    double horizon = options.x_max.value_or(4.0);
    auto classify = [&](double beta) {
        for (;;) {
            try {
                return classify_beta(ladder, beta, horizon, tol_terminal, options.step);
            } catch (const SolverError&) {
                if (sol.escalations >= options.max_escalations) {
                    throw;
                }
                horizon *= 2.0;
                ++sol.escalations;
            }
        }
    };

    double lo = sol.beta_lower;
    double hi = sol.beta_upper_seed;
    for (int grow = 0; classify(hi) == BetaClass::D; ++grow) {
        if (grow >= options.max_escalations) {
            throw SolverError("no unbounded beta found above " + std::to_string(hi));
        }
        hi = lo + 2.0 * (hi - lo);
    }
    auto bisect = [&](double width) {
        while (hi - lo > width && sol.bisection_steps < 400) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) {
                return false;
            }
            (classify(mid) == BetaClass::D ? lo : hi) = mid;
            ++sol.bisection_steps;
        }
        return true;
    };
    bisect(tol_beta);
    if (lo == sol.beta_lower) {
        throw SolverError("bisection collapsed onto the lower bound; check c-hat ordering and theta_0");
    }
    // RK4 discretisation biases the bracket slightly; the growing mode turns
    // that bias into a failed threshold search when tau_1 sits far out. Polish
    // beta* by bisecting on the closed-form chain, down to adjacent doubles.
    constexpr double kChainXMax = 1e3;
    auto chain_is_d = [&](double beta) {
        return run_chain(ladder, beta, kChainXMax, options.root_tol).cls == BetaClass::D;
    };
    double step = std::max(hi - lo, 1e-12 * std::abs(hi));
    double a = lo;
    double b = hi;
    for (int i = 0; !chain_is_d(a); ++i) {
        if (i >= 60 || a - step <= sol.beta_lower) {
            throw SolverError("closed-form refinement found no lower bracket for beta*");
        }
        b = a;
        a -= step;
        step *= 2.0;
    }
    for (int i = 0; chain_is_d(b); ++i) {
        if (i >= 60) {
            throw SolverError("closed-form refinement found no upper bracket for beta*");
        }
        a = b;
        b += step;
        step *= 2.0;
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) {
            break;
        }
        (chain_is_d(mid) ? a : b) = mid;
        ++sol.bisection_steps;
    }
    sol.beta_star = b;
    sol.tau = extract_thresholds(ladder, sol.beta_star, kChainXMax, options.root_tol);

    const std::size_t L = ladder.rungs();
    for (std::size_t l = 1; l <= L + 1; ++l) {
        PieceParams pp;
        pp.l = l;
        pp.tau = l <= L ? sol.tau[l - 1] : 0.0;
        pp.theta = ladder.theta[l - 1];
        pp.cost = ladder.cost_at_theta[l - 1];
        pp.c_hat = l <= L ? ladder.c_hat[l - 1] : p;
        sol.pieces.push_back(pp);
    }

    sol.x_max = options.x_max.value_or(4.0 * sol.tau.front());
    sol.terminal_gap = std::abs(sol.value(ladder, sol.x_max) - p);
    int widen = 0;
    while (sol.terminal_gap > tol_terminal) {
        if (widen >= options.max_escalations) {
            throw SolverError("terminal gap " + std::to_string(sol.terminal_gap) + " at x_max = " +
                              std::to_string(sol.x_max) + " exceeds tolerance; raise x_max");
        }
        sol.x_max *= 2.0;
        sol.terminal_gap = std::abs(sol.value(ladder, sol.x_max) - p);
        ++widen;
    }
    sol.escalations += widen;

    // Dense near the thresholds, geometric in the tail.
    const std::size_t n = std::max<std::size_t>(options.samples, 4);
    const double knee = std::min(2.0 * sol.tau.front(), sol.x_max);
    const std::size_t near = n / 2;
    for (std::size_t i = 0; i < near; ++i) {
        sol.sample_x.push_back(knee * static_cast<double>(i) / static_cast<double>(near));
    }
    const std::size_t far = n - near;
    for (std::size_t i = 0; i < far; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(far - 1);
        sol.sample_x.push_back(knee * std::pow(sol.x_max / knee, t));
    }
    sol.sample_x.back() = sol.x_max;
    for (double x : sol.sample_x) {
        sol.sample_v.push_back(sol.value(ladder, x));
    }
    return sol;
}

std::vector<double> workload_thresholds(const BellmanSolution& solution, double n, double mu) {
    std::vector<double> q;
    q.reserve(solution.tau.size());
    for (double t : solution.tau) {
        q.push_back(std::sqrt(n) * t * mu);
    }
    return q;
}

}  // namespace engage
