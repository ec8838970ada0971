#include "engage/cost.hpp"

#include "engage/error.hpp"

#include <algorithm>
#include <string>

namespace engage {

double cost_c(const DriftLadder& ladder, double x) {
    const auto& th = ladder.theta;
    if (!(x >= th.front() && x <= th.back())) {
        throw DomainError("cost_c: x = " + std::to_string(x) + " outside [" + std::to_string(th.front()) + ", " +
                          std::to_string(th.back()) + "]");
    }
    if (x == th.front()) {
        return 0.0;
    }
    // first l with x <= theta_l
    const auto it = std::lower_bound(th.begin() + 1, th.end(), x);
    const auto l = static_cast<std::size_t>(it - th.begin());
    if (x == th[l]) {
        return ladder.cost_at_theta[l];
    }
    return ladder.cost_at_theta[l - 1] + ladder.c_hat[l - 1] * (x - th[l - 1]);
}

std::size_t psi_index(const DriftLadder& ladder, double y) {
    const auto& c = ladder.c_hat;
    return static_cast<std::size_t>(std::lower_bound(c.begin(), c.end(), y) - c.begin());
}

double psi_min_argmax(const DriftLadder& ladder, double y) {
    return ladder.theta[psi_index(ladder, y)];
}

double conjugate_phi(const DriftLadder& ladder, double y) {
    const auto m = psi_index(ladder, y);
    return ladder.theta[m] * y - ladder.cost_at_theta[m];
}

double beta_lower_bound(const DriftLadder& ladder) {
    if (!(ladder.theta.front() < 0.0) || !(ladder.theta.back() > 0.0)) {
        throw DomainError("phi is unbounded below: need theta_0 < 0 < theta_L");
    }
    double lowest = 0.0;
    for (double y : ladder.c_hat) {
        lowest = std::min(lowest, conjugate_phi(ladder, y));
    }
    return -lowest;
}

}  // namespace engage
