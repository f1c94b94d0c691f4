#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace preproc {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) without overflow; handles -inf operands.
inline double log_add_exp(double a, double b) {
    if (a < b) std::swap(a, b);
    if (a == -kInf) return -kInf;
    return a + std::log1p(std::exp(b - a));
}

inline double log_sum_exp(std::span<const double> v) {
    double hi = -kInf;
    for (double x : v) hi = std::max(hi, x);
    if (hi == -kInf || !std::isfinite(hi)) return hi;
    double s = 0.0;
    for (double x : v) s += std::exp(x - hi);
    return hi + std::log(s);
}

} // namespace preproc
