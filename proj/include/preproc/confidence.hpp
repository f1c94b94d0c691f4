#pragma once

#include "preproc/distributions.hpp"
#include "preproc/mixing.hpp"
#include "preproc/pr_engine.hpp"

#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace preproc {

struct Candidate {
    Distribution distribution;
    double feature = 0.0;
};

// Explicit candidate distributions, each tagged with its feature value.
struct FeatureGrid {
    std::vector<Candidate> candidates;
    double alpha = 0.05;

    // N(theta, sd^2) for theta on an evenly spaced grid; feature = theta.
    static FeatureGrid normal_means(double lower, double upper, std::size_t count, double sd, double alpha);

    void validate() const;
};

// Numerator configuration shared by every candidate.
struct PrConfig {
    KernelFamily family = KernelFamily::gaussian;
    IndexGrid grid = IndexGrid::gaussian_default();
    WeightSchedule schedule = WeightSchedule::power();
};

struct ConfidenceSet {
    double log_numerator = 0.0;
    std::vector<double> log_e;            // per candidate; +inf when the data lie outside its support
    std::vector<std::size_t> retained;    // candidate indices with anytime p-value > alpha
    std::vector<double> features;         // feature values of the retained candidates
    std::optional<std::pair<double, double>> hull;
};

// { phi(P) : min(1, 1 / E_n(x; {P})) > alpha } over the candidate grid. The
// PR numerator is computed once on the data and shared.
ConfidenceSet confidence_set(std::span<const double> data, const FeatureGrid& grid, const PrConfig& pr,
                             std::size_t workers = 1);
ConfidenceSet confidence_set_from_numerator(double log_numerator, std::span<const double> data,
                                            const FeatureGrid& grid, std::size_t workers = 1);

} // namespace preproc
