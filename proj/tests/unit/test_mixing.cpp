#include "doctest.h"

#include "preproc/errors.hpp"
#include "preproc/mixing.hpp"
#include "preproc/numeric.hpp"
#include "preproc/rng.hpp"

#include <algorithm>
#include <cmath>

using namespace preproc;

namespace {

IndexGrid two_gaussians() {
    // Densities 2 and 1 at x = 0.
    const double s1 = 1.0 / (2.0 * std::sqrt(2.0 * M_PI));
    const double s2 = 1.0 / std::sqrt(2.0 * M_PI);
    return IndexGrid::explicit_nodes({{{0.0, s1}}, {{0.0, s2}}});
}

} // namespace

TEST_CASE("uniform init over four nodes") {
    const auto grid = IndexGrid::rectangle({{0.0, 1.0, 2, Spacing::linear}, {1.0, 2.0, 2, Spacing::linear}});
    const auto state = uniform_init(grid);
    REQUIRE(state.log_weights.size() == 4);
    for (double lw : state.log_weights) CHECK(std::exp(lw) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("grid construction rejects a single node per dimension") {
    CHECK_THROWS_AS(IndexGrid::rectangle({{0.0, 1.0, 1, Spacing::linear}, {1.0, 2.0, 4, Spacing::linear}}), ConfigError);
    CHECK_THROWS_AS(IndexGrid::rectangle({{1.0, 1.0, 3, Spacing::linear}, {1.0, 2.0, 4, Spacing::linear}}), ConfigError);
    CHECK_THROWS_AS(IndexGrid::rectangle({{0.0, 1.0, 3, Spacing::logarithmic}, {1.0, 2.0, 4, Spacing::linear}}),
                    ConfigError);
    CHECK_THROWS_AS(IndexGrid::rectangle({{0.0, 1.0, 3, Spacing::linear}}), ConfigError);
    CHECK_THROWS_AS(IndexGrid::explicit_nodes({}), ConfigError);
}

TEST_CASE("30 x 30 grid is normalized") {
    const auto grid = IndexGrid::rectangle({{-1.0, 1.0, 30, Spacing::linear}, {0.1, 2.0, 30, Spacing::linear}});
    const auto state = uniform_init(grid);
    REQUIRE(state.log_weights.size() == 900);
    CHECK(std::abs(log_sum_exp(state.log_weights)) < 1e-12);
    for (double lw : state.log_weights) CHECK(std::exp(lw) == doctest::Approx(1.0 / 900.0).epsilon(1e-14));
}

TEST_CASE("grid nodes are sorted, inside bounds, first dimension outermost") {
    const GridDim rate{1e-5, 5.0, 40, Spacing::logarithmic};
    const auto nodes = dimension_nodes(rate);
    CHECK(nodes.front() == 1e-5);
    CHECK(nodes.back() == 5.0);
    CHECK(std::is_sorted(nodes.begin(), nodes.end()));
    // Log spacing: constant ratio.
    CHECK(nodes[2] / nodes[1] == doctest::Approx(nodes[1] / nodes[0]).epsilon(1e-12));
    const auto g = IndexGrid::gamma_default();
    REQUIRE(g.size() == 1600);
    CHECK(g.nodes()[0].first() == 1.0);
    CHECK(g.nodes()[1].first() == 1.0);
    CHECK(g.nodes()[40].first() > 1.0);
    CHECK(g.nodes().back() == KernelPoint{{15.0, 5.0}});
    const auto n = IndexGrid::gaussian_default();
    CHECK(n.dims()[0] == GridDim{-10.0, 20.0, 40, Spacing::linear});
    CHECK(n.dims()[1] == GridDim{0.01, 3.0, 40, Spacing::linear});
}

TEST_CASE("uniform mixture of densities 2 and 1 is log 1.5") {
    const auto state = uniform_init(two_gaussians());
    CHECK(mixture_log_density(state, KernelFamily::gaussian, 0.0) == doctest::Approx(std::log(1.5)).epsilon(1e-14));
}

TEST_CASE("point-mass limit gives the single kernel") {
    auto state = uniform_init(two_gaussians());
    state.log_weights = {0.0, -800.0};
    normalize(state);
    const double x = 0.37;
    CHECK(mixture_log_density(state, KernelFamily::gaussian, x) ==
          doctest::Approx(log_density(KernelFamily::gaussian, state.grid.nodes()[0], x)).epsilon(1e-14));
}

TEST_CASE("mixture log density lies between kernel extremes and ignores weight offsets") {
    Rng rng(5);
    const auto grid = IndexGrid::rectangle({{-3.0, 3.0, 5, Spacing::linear}, {0.2, 2.0, 4, Spacing::linear}});
    for (int t = 0; t < 50; ++t) {
        MixingState s = uniform_init(grid);
        for (double& lw : s.log_weights) lw = 5.0 * (rng.uniform() - 0.5);
        normalize(s);
        const double x = 8.0 * (rng.uniform() - 0.5);
        double lo = kInf, hi = -kInf;
        for (const auto& u : grid.nodes()) {
            lo = std::min(lo, log_density(KernelFamily::gaussian, u, x));
            hi = std::max(hi, log_density(KernelFamily::gaussian, u, x));
        }
        const double m = mixture_log_density(s, KernelFamily::gaussian, x);
        CHECK(m >= lo - 1e-12);
        CHECK(m <= hi + 1e-12);
        MixingState shifted = s;
        for (double& lw : shifted.log_weights) lw += 123.456;
        normalize(shifted);
        CHECK(std::abs(mixture_log_density(shifted, KernelFamily::gaussian, x) - m) < 1e-12);
    }
}

TEST_CASE("mixture evaluation propagates unsupported observations") {
    const auto state = uniform_init(IndexGrid::gamma_default(4));
    CHECK_THROWS_AS(mixture_log_density(state, KernelFamily::gamma, -0.5), UnsupportedObservation);
}
