#include "preproc/mixing.hpp"

#include "preproc/errors.hpp"
#include "preproc/numeric.hpp"

#include <cmath>

namespace preproc {

std::vector<double> dimension_nodes(const GridDim& dim) {
    std::vector<double> out(dim.nodes);
    const double last = static_cast<double>(dim.nodes - 1);
    for (std::size_t k = 0; k < dim.nodes; ++k) {
        const double t = static_cast<double>(k) / last;
        if (dim.spacing == Spacing::linear)
            out[k] = dim.lower + t * (dim.upper - dim.lower);
        else
            out[k] = std::exp(std::log(dim.lower) + t * (std::log(dim.upper) - std::log(dim.lower)));
    }
    out.front() = dim.lower;
    out.back() = dim.upper;
    return out;
}

IndexGrid IndexGrid::rectangle(std::vector<GridDim> dims) {
    if (dims.size() != 2) throw ConfigError("index grid must have exactly two dimensions");
    for (const auto& d : dims) {
        if (!std::isfinite(d.lower) || !std::isfinite(d.upper)) throw ConfigError("grid bounds must be finite");
        if (!(d.lower < d.upper)) throw ConfigError("grid lower bound must be below upper bound");
        if (d.nodes < 2) throw ConfigError("grid needs at least 2 nodes per dimension");
        if (d.spacing == Spacing::logarithmic && d.lower <= 0.0)
            throw ConfigError("logarithmic grid spacing needs a positive lower bound");
    }
    IndexGrid g;
    g.dims_ = std::move(dims);
    const auto a = dimension_nodes(g.dims_[0]);
    const auto b = dimension_nodes(g.dims_[1]);
    g.nodes_.reserve(a.size() * b.size());
    for (double x : a)
        for (double y : b) g.nodes_.push_back(KernelPoint{{x, y}});
    return g;
}

IndexGrid IndexGrid::explicit_nodes(std::vector<KernelPoint> nodes) {
    if (nodes.empty()) throw ConfigError("explicit grid needs at least one node");
    for (const auto& u : nodes)
        if (!std::isfinite(u.first()) || !std::isfinite(u.second())) throw ConfigError("grid nodes must be finite");
    IndexGrid g;
    g.nodes_ = std::move(nodes);
    return g;
}

IndexGrid IndexGrid::gaussian_default(std::size_t n) {
    return rectangle({{-10.0, 20.0, n, Spacing::linear}, {0.01, 3.0, n, Spacing::linear}});
}

IndexGrid IndexGrid::gamma_default(std::size_t n) {
    return rectangle({{1.0, 15.0, n, Spacing::linear}, {1e-5, 5.0, n, Spacing::logarithmic}});
}

MixingState uniform_init(const IndexGrid& grid) {
    MixingState s{grid, std::vector<double>(grid.size(), -std::log(static_cast<double>(grid.size())))};
    return s;
}

void normalize(MixingState& state) {
    const double z = log_sum_exp(state.log_weights);
    for (auto& w : state.log_weights) w -= z;
}

double mixture_log_density(std::span<const double> log_weights, const KernelTable& table, double x,
                           std::span<double> scratch) {
    table.log_densities(x, scratch);
    for (std::size_t j = 0; j < scratch.size(); ++j) scratch[j] += log_weights[j];
    return log_sum_exp(scratch);
}

double mixture_log_density(const MixingState& state, KernelFamily family, double x) {
    const KernelTable table(family, state.grid.nodes());
    std::vector<double> scratch(table.size());
    return mixture_log_density(state.log_weights, table, x, scratch);
}

} // namespace preproc
