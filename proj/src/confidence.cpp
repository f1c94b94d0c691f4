#include "preproc/confidence.hpp"

#include "preproc/eprocess.hpp"
#include "preproc/errors.hpp"
#include "preproc/numeric.hpp"
#include "preproc/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace preproc {

FeatureGrid FeatureGrid::normal_means(double lower, double upper, std::size_t count, double sd, double alpha) {
    if (count < 1 || !(lower <= upper)) throw ConfigError("normal mean grid needs count >= 1 and lower <= upper");
    FeatureGrid g;
    g.alpha = alpha;
    for (std::size_t k = 0; k < count; ++k) {
        const double theta = count == 1 ? lower : lower + (upper - lower) * static_cast<double>(k) / (count - 1.0);
        g.candidates.push_back({Distribution::normal(theta, sd), theta});
    }
    return g;
}

void FeatureGrid::validate() const {
    if (candidates.empty()) throw ConfigError("confidence grid has no candidates");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("confidence alpha must lie in [0, 1]");
    for (const auto& c : candidates)
        if (!std::isfinite(c.feature)) throw ConfigError("candidate feature values must be finite");
}

ConfidenceSet confidence_set_from_numerator(double log_numerator, std::span<const double> data,
                                            const FeatureGrid& grid, std::size_t workers) {
    grid.validate();
    ConfidenceSet out;
    out.log_numerator = log_numerator;
    out.log_e.resize(grid.candidates.size());
    parallel_for(grid.candidates.size(), workers, [&](std::size_t k) {
        const auto& dist = grid.candidates[k].distribution;
        double log_den = 0.0;
        for (double x : data) log_den += dist.log_pdf(x);
        out.log_e[k] = log_numerator - log_den; // +inf when some x has zero density
    });
    for (std::size_t k = 0; k < grid.candidates.size(); ++k) {
        if (anytime_p(out.log_e[k]) > grid.alpha) {
            out.retained.push_back(k);
            out.features.push_back(grid.candidates[k].feature);
        }
    }
    if (!out.features.empty()) {
        const auto [lo, hi] = std::minmax_element(out.features.begin(), out.features.end());
        out.hull = std::make_pair(*lo, *hi);
    }
    return out;
}

ConfidenceSet confidence_set(std::span<const double> data, const FeatureGrid& grid, const PrConfig& pr,
                             std::size_t workers) {
    PrState state(pr.family, pr.grid, pr.schedule);
    for (double x : data) state.update(x);
    return confidence_set_from_numerator(state.log_marginal(), data, grid, workers);
}

} // namespace preproc
