#pragma once

#include "preproc/distributions.hpp"
#include "preproc/json_util.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace preproc {

struct GaussianFit {
    double mean = 0.0;
    double variance = 0.0; // divide-by-n estimate
};

// Decreasing step density on (0, knots.back()]: heights[k] on
// (knots[k], knots[k+1]], with knots[0] = 0. A point sitting on a knot takes
// the height of the block to its left, so every observation is scored by
// the block it closes.
struct GrenanderFit {
    std::vector<double> knots;
    std::vector<double> heights;

    double density(double x) const;
};

// Log-density linear between consecutive knots, concave, -inf outside
// [knots.front(), knots.back()].
struct LogConcaveFit {
    std::vector<double> knots;
    std::vector<double> log_density_at_knots;
    int iterations = 0;

    double log_density(double x) const;
    double integral() const;
    // Largest slope increase across interior knots (<= 0 when concave).
    double max_slope_increase() const;
};

struct SimpleFit {
    std::string density;
};

struct FiniteFit {
    std::size_t best_index = 0;
};

using FitDescriptor = std::variant<GaussianFit, GrenanderFit, LogConcaveFit, SimpleFit, FiniteFit>;

struct NullFit {
    double log_lik_sup = 0.0;
    FitDescriptor fit;
    std::size_t n = 0;
};

json to_json(const NullFit& fit);

// Pool-adjacent-violators for a decreasing step density over ordered
// contiguous cells: maximizes sum_k mass_k log h_k subject to h decreasing
// and sum_k h_k length_k = sum_k mass_k. Returns one height per cell.
std::vector<double> decreasing_step_projection(std::span<const double> masses, std::span<const double> lengths);

NullFit gaussian_null_loglik(std::span<const double> x);
NullFit grenander_loglik(std::span<const double> x);
NullFit logconcave_loglik(std::span<const double> x);
NullFit simple_null_loglik(const Distribution& p0, std::span<const double> x);
NullFit simple_null_loglik(const LogDensityFn& log_p0, std::span<const double> x);

struct LogConcaveOptions {
    int max_iterations = 500;
    double relative_tolerance = 1e-9;
};

// Weighted log-concave MLE on the given points (weights default to 1 each).
// Maximizes sum_i w_i phi(x_i) - W * integral exp(phi) over concave
// piecewise-linear phi with knots at the distinct points; the optimum
// integrates to one. Throws DegenerateNull with fewer than 2 distinct
// points and SolverDidNotConverge after max_iterations outer iterations.
LogConcaveFit fit_logconcave(std::span<const double> x, std::span<const double> weights = {},
                             const LogConcaveOptions& options = {});

enum class NullClass { gaussian, monotone, logconcave, simple, finite };

struct NullSpec {
    NullClass cls = NullClass::gaussian;
    std::vector<Distribution> members; // one for simple, several for finite

    static NullSpec gaussian() { return {NullClass::gaussian, {}}; }
    static NullSpec monotone() { return {NullClass::monotone, {}}; }
    static NullSpec logconcave() { return {NullClass::logconcave, {}}; }
    static NullSpec simple(Distribution p0) { return {NullClass::simple, {std::move(p0)}}; }
    static NullSpec finite(std::vector<Distribution> members) { return {NullClass::finite, std::move(members)}; }
};

std::string to_string(NullClass cls);
json null_spec_to_json(const NullSpec& spec);
NullSpec null_spec_from_json(const json& j);

// Null supremum over a growing data prefix. observe() never refits;
// fit() computes sup log-likelihood over the class on everything observed.
class NullModel {
public:
    virtual ~NullModel() = default;
    // Throws UnsupportedObservation when x cannot belong to the class.
    virtual void check(double x) const = 0;
    virtual void observe(double x) = 0;
    virtual NullFit fit() const = 0;
    virtual std::size_t size() const = 0;
    virtual std::unique_ptr<NullModel> clone() const = 0;
};

std::unique_ptr<NullModel> make_null_model(const NullSpec& spec);

// Welford accumulator shared by the batch and streaming Gaussian null.
struct RunningMoments {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
    }
};

NullFit gaussian_fit_from_moments(const RunningMoments& m);

} // namespace preproc
