#pragma once

namespace engage {

/// Scaled complementary error function exp(z^2) erfc(z), finite for all
/// z below about -26.
double erfcx(double z);

}  // namespace engage
