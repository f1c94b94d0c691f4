#include "doctest.h"

#include "oracles.hpp"
#include "preproc/errors.hpp"
#include "preproc/kl_growth.hpp"

#include <cmath>

using namespace preproc;

namespace {

// Reference values computed independently at high precision.
constexpr double kGamma2Monotone = 0.0315243378939103;
constexpr double kGamma10Monotone = 0.346804579763436;
constexpr double kDigamma2 = 0.422784335098467139;
constexpr double kMix6Gaussian = 0.214325578994378;
constexpr double kLaplaceGaussian = 0.0723649429247001;

IndexGrid wide_gaussian_grid() {
    return IndexGrid::rectangle({{-10.0, 20.0, 40, Spacing::linear}, {0.01, 3.0, 40, Spacing::linear}});
}

} // namespace

TEST_CASE("KL of a distribution with itself is zero") {
    for (const auto& p : {Distribution::normal(1.0, 2.0), Distribution::gamma(3.0, 0.5), Distribution::laplace(0, 1),
                          Distribution::bimodal_normal(6.0)}) {
        const auto r = kl_quadrature(p, p);
        CHECK(r.value == 0.0);
        CHECK(r.error < 1e-7);
    }
}

TEST_CASE("closed-form KL values") {
    // Truncating the domain at the 1e-8 quantiles costs more than 1e-9, so
    // the deviation is checked against twice the reported error estimate.
    const auto shift = kl_quadrature(Distribution::normal(0, 1), Distribution::normal(1, 1));
    CHECK(std::abs(shift.value - 0.5) <= 2.0 * shift.error);
    CHECK(shift.error < 1e-6);
    const auto scale = kl_quadrature(Distribution::normal(0, 1), Distribution::normal(0, 2));
    CHECK(std::abs(scale.value - (std::log(2.0) + 0.125 - 0.5)) <= 2.0 * scale.error);
    CHECK(scale.error < 1e-6);
    // Gamma(2, 1) against Exp(1) is psi(2).
    CHECK(std::abs(kl_quadrature(Distribution::gamma(2, 1), Distribution::exponential(1)).value - kDigamma2) < 1e-6);
}

TEST_CASE("KL against a density with smaller support is an error") {
    CHECK_THROWS_AS(kl_quadrature(Distribution::normal(0, 1), Distribution::exponential(1)),
                    AbsoluteContinuityViolation);
    CHECK_THROWS_AS(kl_to_monotone_class(Distribution::normal(0, 1)), ConfigError);
}

TEST_CASE("Gaussian family projection") {
    const auto exact = kl_to_gaussian_family(Distribution::normal(3.0, 2.0));
    CHECK(exact.kl < 1e-9);
    CHECK(exact.mean == doctest::Approx(3.0));
    CHECK(exact.variance == doctest::Approx(4.0));

    const auto mix = Distribution::bimodal_normal(6.0);
    const auto g = kl_to_gaussian_family(mix);
    CHECK(std::abs(g.kl - kMix6Gaussian) < 1e-6);
    CHECK(g.check_improvement <= 1e-6);
    const auto o = oracle::gaussian_projection(mix, -15.0, 21.0);
    CHECK(std::abs(g.kl - o.value) < 1e-5);
    CHECK(std::abs(g.mean - o.mean) < 1e-2);

    const auto lap = Distribution::laplace(0.0, 1.0);
    const auto gl = kl_to_gaussian_family(lap);
    CHECK(std::abs(gl.kl - kLaplaceGaussian) <= 2.0 * gl.error);
    CHECK(gl.error < 1e-5);
    const auto ol = oracle::gaussian_projection(lap, -25.0, 25.0);
    CHECK(std::abs(gl.kl - ol.value) < 1e-5);
    CHECK(gl.variance == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("monotone class projection") {
    const auto e = kl_to_monotone_class(Distribution::exponential(1.0));
    CHECK(e.kl < 1e-4);
    const auto g2 = kl_to_monotone_class(Distribution::gamma(2.0, 1.0));
    CHECK(std::abs(g2.kl - kGamma2Monotone) < 1e-5);
    CHECK(g2.error < 1e-3);
    const auto coarse = kl_to_monotone_class(Distribution::gamma(2.0, 1.0), 10000);
    CHECK(std::abs(coarse.kl - g2.kl) < 0.01 * g2.kl);
    // Scale invariance of the class.
    const auto scaled = kl_to_monotone_class(Distribution::gamma(2.0, 7.0));
    CHECK(std::abs(scaled.kl - kGamma2Monotone) < 1e-5);
    const auto g10 = kl_to_monotone_class(Distribution::gamma(10.0, 1.0));
    CHECK(std::abs(g10.kl - kGamma10Monotone) < 1e-4);
    CHECK(g10.kl > g2.kl);
}

TEST_CASE("mixture grid projection") {
    SUBCASE("a grid kernel is reproduced exactly") {
        const auto grid = IndexGrid::explicit_nodes({{{0.0, 1.0}}, {{2.0, 0.5}}});
        const auto r = kl_to_mixture_grid(Distribution::normal(0.0, 1.0), KernelFamily::gaussian, grid);
        CHECK(r.kl < 1e-6);
        CHECK(r.kl_continuous < 1e-6);
        CHECK(r.weights[0] > 0.999);
    }
    SUBCASE("bimodal target on the default Gaussian rectangle") {
        const auto r = kl_to_mixture_grid(Distribution::bimodal_normal(6.0), KernelFamily::gaussian,
                                          wide_gaussian_grid());
        CHECK(r.converged);
        CHECK(r.kl < 1e-3);
        CHECK(r.kl_continuous < 1e-3);
        CHECK(r.kl_continuous >= r.kl - 1e-9);
        for (std::size_t k = 1; k < r.objective_trace.size(); ++k)
            CHECK(r.objective_trace[k] <= r.objective_trace[k - 1] + 1e-12);
        double total = 0.0;
        for (double w : r.weights) {
            CHECK(w >= 0.0);
            total += w;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("an iteration cap that is too small is reported") {
        MixtureProjectionOptions opt;
        opt.max_iterations = 1;
        CHECK_THROWS_AS(kl_to_mixture_grid(Distribution::bimodal_normal(6.0), KernelFamily::gaussian,
                                           wide_gaussian_grid(), opt),
                        SolverDidNotConverge);
    }
    SUBCASE("targets outside the kernel support") {
        CHECK_THROWS_AS(kl_to_mixture_grid(Distribution::normal(0, 1), KernelFamily::gamma, IndexGrid::gamma_default(5)),
                        AbsoluteContinuityViolation);
    }
}

TEST_CASE("log-concave class projection") {
    const auto n = kl_to_logconcave_class(Distribution::normal(0.0, 1.0));
    CHECK(std::abs(n.kl) < 1e-3);
    const auto mix = kl_to_logconcave_class(Distribution::bimodal_normal(10.0));
    // The Gaussian family is a subset of the log-concave class.
    CHECK(mix.kl > 0.05);
    CHECK(mix.kl <= kl_to_gaussian_family(Distribution::bimodal_normal(10.0)).kl + 1e-3);
}

TEST_CASE("growth rate compositions") {
    const auto mix = Distribution::bimodal_normal(6.0);
    const auto r = growth_rate(mix, NullSpec::gaussian(), KernelFamily::gaussian, wide_gaussian_grid());
    CHECK(r.delta == r.kl_null - r.kl_mixture);
    CHECK(std::abs(r.delta - kMix6Gaussian) < 2e-3);
    CHECK(r.kl_mixture >= 0.0);

    const auto g = growth_rate(Distribution::gamma(2, 1), NullSpec::monotone(), KernelFamily::gamma,
                               IndexGrid::gamma_default());
    CHECK(std::abs(g.delta - kGamma2Monotone) < 2e-3);
    const auto j = to_json(g);
    CHECK(j.contains("kl_null"));
    CHECK(j.contains("delta"));
    CHECK(j.contains("quadrature"));

    // Null is true: the null term is zero and the rate is not positive.
    const auto t = growth_rate(Distribution::normal(0, 1), NullSpec::simple(Distribution::normal(0, 1)),
                               KernelFamily::gaussian, wide_gaussian_grid());
    CHECK(t.kl_null == 0.0);
    CHECK(t.delta <= 0.0);
    const auto f = growth_rate(Distribution::normal(0.5, 1),
                               NullSpec::finite({Distribution::exponential(1), Distribution::normal(0, 1)}),
                               KernelFamily::gaussian, wide_gaussian_grid());
    CHECK(f.kl_null == doctest::Approx(0.125).epsilon(1e-8));
}
