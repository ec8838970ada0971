#include "engage/special.hpp"

#include <cmath>
#include <numbers>

namespace engage {

double erfcx(double z) {
    if (z < 0.0) {
        return 2.0 * std::exp(z * z) - erfcx(-z);
    }
    if (z < 10.0) {
        return std::exp(z * z) * std::erfc(z);
    }
    // Asymptotic series; terms fall below 1e-16 well before they diverge.
    const double inv2z2 = 1.0 / (2.0 * z * z);
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k <= 14; ++k) {
        term *= -(2.0 * k - 1.0) * inv2z2;
        sum += term;
    }
    return sum / (z * std::sqrt(std::numbers::pi));
}

}  // namespace engage
