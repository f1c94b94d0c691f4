#pragma once

#include "preproc/json_util.hpp"
#include "preproc/kernels.hpp"
#include "preproc/rng.hpp"

#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace preproc {

using LogDensityFn = std::function<double(double)>;

struct NormalDist {
    double mean = 0.0;
    double sd = 1.0;
};

struct GammaDist {
    double shape = 1.0;
    double rate = 1.0;
};

struct LaplaceDist {
    double location = 0.0;
    double scale = 1.0;
};

struct NormalComponent {
    double weight = 1.0;
    double mean = 0.0;
    double variance = 1.0;
};

struct NormalMixtureDist {
    std::vector<NormalComponent> components;
};

// Fully specified univariate distribution: a data generator, a singleton
// null member, or the truth P* in growth-rate computations.
class Distribution {
public:
    using Variant = std::variant<NormalDist, GammaDist, LaplaceDist, NormalMixtureDist>;

    explicit Distribution(Variant v);

    static Distribution normal(double mean, double sd) { return Distribution(NormalDist{mean, sd}); }
    static Distribution gamma(double shape, double rate) { return Distribution(GammaDist{shape, rate}); }
    static Distribution exponential(double rate) { return Distribution(GammaDist{1.0, rate}); }
    static Distribution laplace(double location, double scale) { return Distribution(LaplaceDist{location, scale}); }
    static Distribution normal_mixture(std::vector<NormalComponent> components) {
        return Distribution(NormalMixtureDist{std::move(components)});
    }
    // 3/4 N(0, 2) + 1/4 N(mu, 2), the second argument being the variance.
    static Distribution bimodal_normal(double mu);
    // The kernel p_u from a kernel family, as a standalone distribution.
    static Distribution from_kernel(KernelFamily family, const KernelPoint& u);

    const Variant& variant() const { return v_; }

    double log_pdf(double x) const;  // -inf outside the support
    double cdf(double x) const;
    double quantile(double p) const; // p in (0, 1)
    double mean() const;
    double variance() const;
    double support_lower() const;    // 0 or -inf
    bool in_support(double x) const;
    double sample(Rng& rng) const;
    std::string describe() const;

    LogDensityFn log_density_fn() const;

private:
    Variant v_;
};

// {"type": "normal", "mean", "sd"} | {"type": "gamma", "shape", "rate"} |
// {"type": "exponential", "rate"} | {"type": "laplace", "location", "scale"} |
// {"type": "normal_mixture", "components": [{"weight", "mean", "variance"}]} |
// {"type": "bimodal_normal", "mu"}
Distribution distribution_from_json(const json& j);
json distribution_to_json(const Distribution& d);

std::vector<double> sample_n(const Distribution& d, std::size_t n, Rng& rng);

} // namespace preproc
