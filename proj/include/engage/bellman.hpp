#pragma once

#include "engage/params.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace engage {

/// Right-hand side of IVP(beta): v' = (2/sigma^2)(beta - kappa x (p - v) + phi(p - v)).
double ode_rhs(const DriftLadder& ladder, double beta, double x, double v);

struct Trajectory {
    std::vector<double> x;
    std::vector<double> v;
    std::optional<double> crossed_negative_slope_at;  // first x with v' < 0 or v < 0
    std::optional<double> reached_p_at;               // first x with v >= p
};

/// Fixed-step RK4 from v(0) = 0 up to x_max, stopping at the first event.
/// Throws SolverError if the state stops being finite.
Trajectory integrate_v(const DriftLadder& ladder, double beta, double x_max, double step);

enum class BetaClass { D, I_unbounded, Boundary };

/// D if v or v' goes negative before x_max, I_unbounded if v reaches p,
/// Boundary if neither and |v(x_max) - p| <= tol. Otherwise throws
/// SolverError (indeterminate: x_max too small).
BetaClass classify_beta(const DriftLadder& ladder, double beta, double x_max, double tol,
                        double step = 1e-3);

/// Which form of u_l to evaluate. Far drops the growing homogeneous mode,
/// whose coefficient vanishes at beta*; it is the bounded tail of v above tau_1.
enum class PieceBranch { Full, Far };

/// Closed-form value function on piece l (1..L+1) started at tau_l, where
/// u_l(tau_l) = p - c_hat_l and c_hat_{L+1} = p.
double u_piece(const DriftLadder& ladder, std::size_t l, double x, double tau_l, double beta,
               PieceBranch branch = PieceBranch::Full);
double u_piece_derivative(const DriftLadder& ladder, std::size_t l, double x, double tau_l, double beta,
                          PieceBranch branch = PieceBranch::Full);

/// tau_1 > ... > tau_L > 0 by sequential root-finding from tau_{L+1} = 0.
std::vector<double> extract_thresholds(const DriftLadder& ladder, double beta, double x_max = 1e3,
                                       double root_tol = 1e-10);

struct SolverOptions {
    std::optional<double> x_max;  // default: 4 x pilot tau_1
    std::optional<double> tol_beta;      // default 1e-8 p
    std::optional<double> tol_terminal;  // default 1e-3 p
    double root_tol = 1e-10;
    double step = 1e-3;
    std::size_t samples = 2001;
    int max_escalations = 10;
};

struct PieceParams {
    std::size_t l = 0;
    double tau = 0.0;
    double theta = 0.0;   // theta_{l-1}
    double cost = 0.0;    // c(theta_{l-1})
    double c_hat = 0.0;   // c_hat_l, p for the last piece
};

struct BellmanSolution {
    double beta_star = 0.0;
    double beta_lower = 0.0;
    double beta_upper_seed = 0.0;
    std::vector<double> tau;          // tau_1 .. tau_L
    std::vector<PieceParams> pieces;  // l = 1 .. L+1
    std::vector<double> sample_x;
    std::vector<double> sample_v;
    double x_max = 0.0;
    double terminal_gap = 0.0;
    int bisection_steps = 0;
    int escalations = 0;

    /// Closed-form v(x); the far branch is used above tau_1.
    [[nodiscard]] double value(const DriftLadder& ladder, double x) const;
    [[nodiscard]] double derivative(const DriftLadder& ladder, double x) const;
    /// Piece index l with x in [tau_l, tau_{l-1}).
    [[nodiscard]] std::size_t piece_at(double x) const;
};

/// Upper end of the initial bisection bracket: beta_lower + sigma^2 p / (2 alpha) + margin.
double beta_upper_seed(const DriftLadder& ladder, double margin = 1.0);

BellmanSolution solve_beta_star(const DriftLadder& ladder, const SolverOptions& options = {});

/// Queue-count thresholds q*_l = sqrt(n) tau_l mu.
std::vector<double> workload_thresholds(const BellmanSolution& solution, double n, double mu);

}  // namespace engage
