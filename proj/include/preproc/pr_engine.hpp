#pragma once

#include "preproc/json_util.hpp"
#include "preproc/kernels.hpp"
#include "preproc/mixing.hpp"

#include <cstdint>
#include <vector>

namespace preproc {

// PR step sizes w_i, i >= 1.
class WeightSchedule {
public:
    static constexpr double kDefaultExponent = 0.67;

    // w_i = (i + 1)^(-exponent). Throws ConfigError unless exponent is in
    // (0.5, 1], the range where sum w_i diverges and sum w_i^2 converges.
    static WeightSchedule power(double exponent = kDefaultExponent);
    // w_i = weights[i - 1], each in [0, 1). Whether the divergence and
    // square-summability conditions hold cannot be decided from finitely
    // many terms, so condition_verified() is false for these.
    static WeightSchedule explicit_sequence(std::vector<double> weights);

    bool is_power() const { return explicit_.empty() && exponent_ > 0.0; }
    double exponent() const { return exponent_; }
    const std::vector<double>& explicit_weights() const { return explicit_; }
    bool condition_verified() const { return is_power(); }

    // Throws for i == 0 and when an explicit sequence is exhausted.
    double at(std::uint64_t i) const;

    bool operator==(const WeightSchedule&) const = default;

private:
    double exponent_ = 0.0;
    std::vector<double> explicit_;
};

double weight_at(const WeightSchedule& schedule, std::uint64_t i);

// Running predictive-recursion fit plus the accumulated joint log marginal
// log q_PR(x^i) = sum_k log q_{x^{k-1}}(x_k).
class PrState {
public:
    PrState(KernelFamily family, const IndexGrid& grid, WeightSchedule schedule);
    // Restores a state captured earlier; log_weights are renormalized.
    PrState(KernelFamily family, MixingState mixing, WeightSchedule schedule, std::uint64_t step,
            double log_marginal);

    // Advances by one observation and returns log q_{x^{i-1}}(x), the
    // pre-update predictive log-density. Strong guarantee: on error the
    // state is unchanged.
    double update(double x);

    // Predictive log-density of the current fit; does not mutate.
    double predictive_log_density(double x) const;

    KernelFamily family() const { return family_; }
    const MixingState& mixing() const { return mixing_; }
    const WeightSchedule& schedule() const { return schedule_; }
    std::uint64_t step() const { return step_; }
    double log_marginal() const { return log_marginal_; }

    json to_json() const;
    static PrState from_json(const json& j);

private:
    KernelFamily family_;
    MixingState mixing_;
    WeightSchedule schedule_;
    std::uint64_t step_ = 0;
    double log_marginal_ = 0.0;
    KernelTable table_;
    mutable std::vector<double> scratch_;
};

PrState pr_update(PrState state, double x);
inline double log_marginal(const PrState& state) { return state.log_marginal(); }

json grid_to_json(const IndexGrid& grid);
IndexGrid grid_from_json(const json& j);
json schedule_to_json(const WeightSchedule& s);
WeightSchedule schedule_from_json(const json& j);

} // namespace preproc
