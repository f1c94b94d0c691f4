#pragma once

#include "preproc/kernels.hpp"

#include <span>
#include <vector>

namespace preproc {

enum class Spacing { linear, logarithmic };

struct GridDim {
    double lower = 0.0;
    double upper = 1.0;
    std::size_t nodes = 40;
    Spacing spacing = Spacing::linear;

    bool operator==(const GridDim&) const = default;
};

// Gridded compact index set for the mixing distribution. Either a tensor
// grid over a rectangle (two dimensions, first dimension outermost) or an
// explicit node list.
class IndexGrid {
public:
    static constexpr std::size_t kDefaultNodes = 40;

    // Throws ConfigError unless each dimension has finite bounds,
    // lower < upper, nodes >= 2, and positive bounds when logarithmic.
    static IndexGrid rectangle(std::vector<GridDim> dims);
    // Arbitrary finite node list (at least one node), e.g. a single kernel.
    static IndexGrid explicit_nodes(std::vector<KernelPoint> nodes);

    // Rectangle [-10,20] x [0.01,3] in (mean, sd), linear spacing.
    static IndexGrid gaussian_default(std::size_t nodes_per_dim = kDefaultNodes);
    // Rectangle [1,15] x [1e-5,5] in (shape, rate), log-spaced rate.
    static IndexGrid gamma_default(std::size_t nodes_per_dim = kDefaultNodes);

    bool is_rectangle() const { return !dims_.empty(); }
    const std::vector<GridDim>& dims() const { return dims_; }
    const std::vector<KernelPoint>& nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }

    bool operator==(const IndexGrid&) const = default;

private:
    std::vector<GridDim> dims_;
    std::vector<KernelPoint> nodes_;
};

// Nodes of a single dimension, sorted, endpoints exact.
std::vector<double> dimension_nodes(const GridDim& dim);

// Discrete mixing distribution over the grid nodes, kept in log space.
struct MixingState {
    IndexGrid grid;
    std::vector<double> log_weights;
};

MixingState uniform_init(const IndexGrid& grid);

// Shifts log_weights so that their log-sum-exp is 0.
void normalize(MixingState& state);

// log sum_j psi_j p_{u_j}(x). Throws UnsupportedObservation.
double mixture_log_density(const MixingState& state, KernelFamily family, double x);
double mixture_log_density(std::span<const double> log_weights, const KernelTable& table, double x,
                           std::span<double> scratch);

} // namespace preproc
