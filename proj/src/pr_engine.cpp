#include "preproc/pr_engine.hpp"

#include "preproc/errors.hpp"
#include "preproc/numeric.hpp"

#include <cmath>
#include <string>

namespace preproc {

namespace {
constexpr int kCheckpointVersion = 1;
}

WeightSchedule WeightSchedule::power(double exponent) {
    if (!(exponent > 0.5 && exponent <= 1.0))
        throw ConfigError("weight exponent must lie in (0.5, 1] (got " + std::to_string(exponent) + ")");
    WeightSchedule s;
    s.exponent_ = exponent;
    return s;
}

WeightSchedule WeightSchedule::explicit_sequence(std::vector<double> weights) {
    if (weights.empty()) throw ConfigError("explicit weight sequence is empty");
    for (double w : weights)
        if (!(w >= 0.0 && w < 1.0)) throw ConfigError("explicit weights must lie in [0, 1)");
    WeightSchedule s;
    s.explicit_ = std::move(weights);
    return s;
}

double WeightSchedule::at(std::uint64_t i) const {
    if (i == 0) throw ConfigError("weight index starts at 1");
    if (is_power()) return std::pow(static_cast<double>(i) + 1.0, -exponent_);
    if (i > explicit_.size())
        throw ConfigError("explicit weight sequence exhausted at step " + std::to_string(i));
    return explicit_[i - 1];
}

double weight_at(const WeightSchedule& schedule, std::uint64_t i) { return schedule.at(i); }

PrState::PrState(KernelFamily family, const IndexGrid& grid, WeightSchedule schedule)
    : family_(family), mixing_(uniform_init(grid)), schedule_(std::move(schedule)),
      table_(family, grid.nodes()), scratch_(grid.size()) {}

PrState::PrState(KernelFamily family, MixingState mixing, WeightSchedule schedule, std::uint64_t step,
                 double log_marginal)
    : family_(family), mixing_(std::move(mixing)), schedule_(std::move(schedule)), step_(step),
      log_marginal_(log_marginal), table_(family, mixing_.grid.nodes()), scratch_(mixing_.grid.size()) {
    if (mixing_.log_weights.size() != mixing_.grid.size())
        throw ConfigError("checkpoint log_weights length does not match the grid");
    for (double w : mixing_.log_weights)
        if (!std::isfinite(w)) throw ConfigError("checkpoint log_weights must be finite");
    if (!std::isfinite(log_marginal_)) throw ConfigError("checkpoint log_marginal must be finite");
    normalize(mixing_);
}

double PrState::predictive_log_density(double x) const {
    return mixture_log_density(mixing_.log_weights, table_, x, scratch_);
}

double PrState::update(double x) {
    const double w = schedule_.at(step_ + 1);
    table_.log_densities(x, scratch_);
    auto& lw = mixing_.log_weights;
    const std::size_t n = lw.size();
    // scratch_ holds log p_j(x); m = log sum_j psi_j p_j(x).
    double hi = -kInf;
    for (std::size_t j = 0; j < n; ++j) hi = std::max(hi, lw[j] + scratch_[j]);
    if (!std::isfinite(hi))
        throw NumericalDegeneracy("predictive density is zero at x = " + std::to_string(x) +
                                  "; widen the index set or refine the grid");
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::exp(lw[j] + scratch_[j] - hi);
    const double m = hi + std::log(s);

    // psi_j <- psi_j * ((1 - w) + w p_j(x) / q(x))
    const double keep = 1.0 - w;
    const double log_w = std::log(w);
    double new_hi = -kInf;
    for (std::size_t j = 0; j < n; ++j) {
        const double d = scratch_[j] - m;
        const double factor = d < 600.0 ? std::log(keep + w * std::exp(d)) : d + log_w;
        lw[j] += factor;
        new_hi = std::max(new_hi, lw[j]);
    }
    double t = 0.0;
    for (std::size_t j = 0; j < n; ++j) t += std::exp(lw[j] - new_hi);
    const double z = new_hi + std::log(t);
    for (std::size_t j = 0; j < n; ++j) lw[j] -= z;

    ++step_;
    log_marginal_ += m;
    return m;
}

PrState pr_update(PrState state, double x) {
    state.update(x);
    return state;
}

json grid_to_json(const IndexGrid& grid) {
    if (grid.is_rectangle()) {
        json dims = json::array();
        for (const auto& d : grid.dims())
            dims.push_back({{"lower", d.lower},
                            {"upper", d.upper},
                            {"nodes", d.nodes},
                            {"spacing", d.spacing == Spacing::linear ? "linear" : "log"}});
        return {{"dims", dims}};
    }
    json nodes = json::array();
    for (const auto& u : grid.nodes()) nodes.push_back({u.first(), u.second()});
    return {{"nodes", nodes}};
}

IndexGrid grid_from_json(const json& j) {
    expect_keys(j, {"dims", "nodes"}, "grid");
    if (j.contains("dims") == j.contains("nodes")) throw ConfigError("grid: give exactly one of 'dims' or 'nodes'");
    if (j.contains("nodes")) {
        std::vector<KernelPoint> nodes;
        for (const auto& n : j.at("nodes")) {
            if (!n.is_array() || n.size() != 2) throw ConfigError("grid: each node must be a pair of numbers");
            nodes.push_back(KernelPoint{{n[0].get<double>(), n[1].get<double>()}});
        }
        return IndexGrid::explicit_nodes(std::move(nodes));
    }
    std::vector<GridDim> dims;
    for (const auto& d : j.at("dims")) {
        expect_keys(d, {"lower", "upper", "nodes", "spacing"}, "grid dimension");
        GridDim g;
        g.lower = require<double>(d, "lower", "grid dimension");
        g.upper = require<double>(d, "upper", "grid dimension");
        const auto nodes = optional<std::int64_t>(d, "nodes", IndexGrid::kDefaultNodes, "grid dimension");
        if (nodes < 2) throw ConfigError("grid needs at least 2 nodes per dimension");
        g.nodes = static_cast<std::size_t>(nodes);
        const auto spacing = optional<std::string>(d, "spacing", "linear", "grid dimension");
        if (spacing == "linear")
            g.spacing = Spacing::linear;
        else if (spacing == "log")
            g.spacing = Spacing::logarithmic;
        else
            throw ConfigError("grid dimension: spacing must be 'linear' or 'log'");
        dims.push_back(g);
    }
    return IndexGrid::rectangle(std::move(dims));
}

json schedule_to_json(const WeightSchedule& s) {
    if (s.is_power()) return {{"exponent", s.exponent()}};
    return {{"weights", s.explicit_weights()}};
}

WeightSchedule schedule_from_json(const json& j) {
    expect_keys(j, {"exponent", "weights"}, "schedule");
    if (j.contains("exponent") && j.contains("weights"))
        throw ConfigError("schedule: give either 'exponent' or 'weights'");
    if (j.contains("weights")) return WeightSchedule::explicit_sequence(require<std::vector<double>>(j, "weights", "schedule"));
    return WeightSchedule::power(optional<double>(j, "exponent", WeightSchedule::kDefaultExponent, "schedule"));
}

json PrState::to_json() const {
    return {{"format", "preproc.pr_state"},
            {"version", kCheckpointVersion},
            {"family", std::string(to_string(family_))},
            {"grid", grid_to_json(mixing_.grid)},
            {"schedule", schedule_to_json(schedule_)},
            {"step", step_},
            {"log_marginal", log_marginal_},
            {"log_weights", mixing_.log_weights}};
}

PrState PrState::from_json(const json& j) {
    expect_keys(j, {"format", "version", "family", "grid", "schedule", "step", "log_marginal", "log_weights"},
                "pr_state");
    if (require<std::string>(j, "format", "pr_state") != "preproc.pr_state")
        throw ConfigError("pr_state: unexpected format tag");
    if (require<int>(j, "version", "pr_state") != kCheckpointVersion)
        throw ConfigError("pr_state: unsupported checkpoint version");
    const auto family = kernel_family_from_string(require<std::string>(j, "family", "pr_state"));
    MixingState mixing{grid_from_json(j.at("grid")), require<std::vector<double>>(j, "log_weights", "pr_state")};
    // Skip renormalization so the restored weights are bit-identical.
    PrState s(family, mixing.grid, schedule_from_json(j.at("schedule")));
    if (mixing.log_weights.size() != mixing.grid.size())
        throw ConfigError("pr_state: log_weights length does not match the grid");
    for (double w : mixing.log_weights)
        if (!std::isfinite(w)) throw ConfigError("pr_state: log_weights must be finite");
    s.mixing_ = std::move(mixing);
    s.step_ = require<std::uint64_t>(j, "step", "pr_state");
    s.log_marginal_ = require<double>(j, "log_marginal", "pr_state");
    return s;
}

} // namespace preproc
