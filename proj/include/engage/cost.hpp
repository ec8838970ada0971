#pragma once

#include "engage/params.hpp"

#include <cstddef>

namespace engage {

/// Piecewise-linear control cost c(x) on [theta_0, theta_L].
/// Throws DomainError outside the ladder.
double cost_c(const DriftLadder& ladder, double x);

/// Rung index m in 0..L such that psi(y) = theta_m. Left-continuous:
/// y == c_hat_m maps to m - 1.
std::size_t psi_index(const DriftLadder& ladder, double y);

/// Minimal maximizer of y x - c(x) over the ladder.
double psi_min_argmax(const DriftLadder& ladder, double y);

/// Convex conjugate phi(y) = sup_x { y x - c(x) }.
double conjugate_phi(const DriftLadder& ladder, double y);

/// -inf_y phi(y). Throws DomainError unless theta_0 < 0 < theta_L.
double beta_lower_bound(const DriftLadder& ladder);

}  // namespace engage
