#pragma once

// Brute-force reference implementations for tests. Slow by design and
// capped in size; none of this code shares logic with the library solvers.

#include "preproc/distributions.hpp"
#include "preproc/json_util.hpp"
#include "preproc/mixing.hpp"
#include "preproc/pr_engine.hpp"

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace oracle {

class SizeCapExceeded : public std::length_error {
public:
    using std::length_error::length_error;
};

struct OracleResult {
    double value = 0.0;
    std::string method;
    preproc::json metadata; // enough to rerun the oracle exactly
};

struct IsotonicResult : OracleResult {
    std::vector<double> heights; // per cell
};

// Maximizes sum_k m_k log h_k over decreasing step densities on the cells by
// enumerating all 2^(n-1) contiguous block partitions. n <= 12.
IsotonicResult isotonic(std::span<const double> masses, std::span<const double> lengths);

struct LogConcaveResult : OracleResult {
    std::vector<double> points;       // distinct sorted data values
    std::vector<double> log_density;  // fitted log-density at points
};

// Maximizes sum_i phi(x_i) - n log int exp(phi) over concave piecewise-linear
// phi with knots at the distinct data points, by nested grid search over
// (top slope, slope decrements >= 0) with the intercept profiled out.
// `resolution` points per axis, refined `levels` times. n <= 5.
LogConcaveResult logconcave(std::span<const double> x, int resolution = 9, int levels = 40);

// log prod_i q_{i-1}(x_i) recomputed from scratch with linear-space weights
// and freshly evaluated kernel densities.
OracleResult marginal_replay(std::span<const double> data, preproc::KernelFamily family,
                             const preproc::IndexGrid& grid, const preproc::WeightSchedule& schedule);

struct GaussianProjectionResult : OracleResult {
    double mean = 0.0;
    double variance = 0.0;
};

// min over (m, v) of K(P, N(m, v)) by coarse-to-fine grid search, each KL
// by composite Simpson on [lower, upper] with `simpson_points` nodes.
GaussianProjectionResult gaussian_projection(const preproc::Distribution& p, double lower, double upper,
                                             int simpson_points = 20001);

// Composite Simpson integral of f over [a, b] with an odd node count.
template <class F>
double simpson(F&& f, double a, double b, int points) {
    if (points % 2 == 0) ++points;
    const double h = (b - a) / (points - 1);
    double s = f(a) + f(b);
    for (int k = 1; k < points - 1; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + h * k);
    return s * h / 3.0;
}

} // namespace oracle
