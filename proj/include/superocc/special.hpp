#pragma once

#include <cmath>
#include <limits>

#include "superocc/core.hpp"

namespace superocc::special {

/// Scaled complementary error function exp(x^2) erfc(x), accurate for x >= 0.
inline double erfcx(double x) {
    if (x < 25.0) return std::exp(x * x) * std::erfc(x);
    const double inv2 = 1.0 / (x * x);
    // Asymptotic series; relative error below 1e-10 for x >= 25.
    const double series = 1.0 - 0.5 * inv2 + 0.75 * inv2 * inv2 - 1.875 * inv2 * inv2 * inv2;
    return series / (x * std::sqrt(kPi));
}

/// exp(e) * erfc(z) without intermediate overflow or underflow when the
/// product itself is representable.
inline double exp_times_erfc(double e, double z) {
    if (z < 5.0) return std::exp(e) * std::erfc(z);
    return std::exp(e - z * z) * erfcx(z);
}

/// Exponential integral E1(x) = int_x^inf e^{-u}/u du for x > 0.
inline double expint_e1(double x) {
    if (x <= 0.0) throw DomainError("expint_e1 requires x > 0");
    if (x > 700.0) return 0.0;
    return -std::expint(-x);
}

/// exp(-z) I_0(z) for z >= 0.
inline double bessel_i0_scaled(double z) {
    if (z < 600.0) return std::cyl_bessel_i(0.0, z) * std::exp(-z);
    const double inv8z = 1.0 / (8.0 * z);
    const double series = 1.0 + inv8z + 9.0 * inv8z * inv8z / 2.0 + 225.0 * inv8z * inv8z * inv8z / 6.0;
    return series / std::sqrt(kTwoPi * z);
}

}  // namespace superocc::special
