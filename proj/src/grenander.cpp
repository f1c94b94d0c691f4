#include "preproc/errors.hpp"
#include "preproc/null_models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace preproc {

std::vector<double> decreasing_step_projection(std::span<const double> masses, std::span<const double> lengths) {
    struct Block {
        double mass;
        double length;
        std::size_t cells;
    };
    std::vector<Block> stack;
    stack.reserve(masses.size());
    for (std::size_t k = 0; k < masses.size(); ++k) {
        stack.push_back({masses[k], lengths[k], 1});
        // Pool while the left block is not strictly higher than the right one.
        while (stack.size() >= 2) {
            const Block& r = stack.back();
            const Block& l = stack[stack.size() - 2];
            if (l.mass * r.length > r.mass * l.length) break;
            Block merged{l.mass + r.mass, l.length + r.length, l.cells + r.cells};
            stack.pop_back();
            stack.back() = merged;
        }
    }
    std::vector<double> heights;
    heights.reserve(masses.size());
    for (const auto& b : stack) heights.insert(heights.end(), b.cells, b.mass / b.length);
    return heights;
}

double GrenanderFit::density(double x) const {
    if (knots.empty() || !(x > 0.0) || x > knots.back()) return 0.0;
    const auto it = std::lower_bound(knots.begin() + 1, knots.end(), x);
    return heights[static_cast<std::size_t>(it - knots.begin()) - 1];
}

namespace {

// x must be sorted and strictly positive.
NullFit grenander_sorted(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<double> right, mass;
    for (std::size_t i = 0; i < n;) {
        std::size_t k = i;
        while (k < n && x[k] == x[i]) ++k;
        right.push_back(x[i]);
        mass.push_back(static_cast<double>(k - i));
        i = k;
    }
    std::vector<double> lengths(right.size());
    for (std::size_t k = 0; k < right.size(); ++k) lengths[k] = right[k] - (k ? right[k - 1] : 0.0);

    const auto cell_heights = decreasing_step_projection(mass, lengths);
    const double inv_n = 1.0 / static_cast<double>(n);

    GrenanderFit fit;
    fit.knots.push_back(0.0);
    double log_lik = 0.0;
    for (std::size_t k = 0; k < right.size(); ++k) {
        const double h = cell_heights[k] * inv_n;
        log_lik += mass[k] * std::log(h);
        const bool closes_block = k + 1 == right.size() || cell_heights[k + 1] != cell_heights[k];
        if (closes_block) {
            fit.knots.push_back(right[k]);
            fit.heights.push_back(h);
        }
    }
    return NullFit{log_lik, std::move(fit), n};
}

} // namespace

NullFit grenander_loglik(std::span<const double> x) {
    if (x.empty()) throw DegenerateNull("monotone null needs at least one observation");
    std::vector<double> sorted(x.begin(), x.end());
    for (double v : sorted)
        if (!(v > 0.0) || !std::isfinite(v))
            throw UnsupportedObservation("monotone null needs positive observations (got " + std::to_string(v) + ")");
    std::sort(sorted.begin(), sorted.end());
    return grenander_sorted(sorted);
}

namespace detail {
NullFit grenander_presorted(std::span<const double> sorted) { return grenander_sorted(sorted); }
} // namespace detail

} // namespace preproc
