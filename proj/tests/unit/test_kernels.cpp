#include "doctest.h"

#include "oracles.hpp"
#include "preproc/errors.hpp"
#include "preproc/kernels.hpp"
#include "preproc/rng.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>

using namespace preproc;

TEST_CASE("gaussian standard normal mode") {
    CHECK(log_density(KernelFamily::gaussian, {{0.0, 1.0}}, 0.0) == doctest::Approx(-0.9189385332046727).epsilon(1e-15));
}

TEST_CASE("gamma shape 1 rate 1 is the unit exponential") {
    CHECK(log_density(KernelFamily::gamma, {{1.0, 1.0}}, 1.0) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("gaussian mode height for any scale") {
    for (double sigma : {0.01, 0.3, 1.0, 2.5, 40.0}) {
        const double mu = 3.7;
        CHECK(log_density(KernelFamily::gaussian, {{mu, sigma}}, mu) ==
              doctest::Approx(-std::log(sigma) - 0.5 * std::log(2.0 * M_PI)).epsilon(1e-14));
    }
}

TEST_CASE("gamma rejects observations off the positive half-line") {
    CHECK_THROWS_AS(log_density(KernelFamily::gamma, {{2.0, 1.0}}, 0.0), UnsupportedObservation);
    CHECK_THROWS_AS(log_density(KernelFamily::gamma, {{2.0, 1.0}}, -1.0), UnsupportedObservation);
    CHECK_THROWS_AS(log_density(KernelFamily::gaussian, {{0.0, 1.0}}, std::nan("")), UnsupportedObservation);
    CHECK_FALSE(in_support(KernelFamily::gamma, 0.0));
    CHECK(in_support(KernelFamily::gaussian, -5.0));
}

TEST_CASE("invalid kernel indices are rejected") {
    CHECK_THROWS_AS(validate(KernelFamily::gaussian, {{0.0, 0.0}}), ConfigError);
    CHECK_THROWS_AS(validate(KernelFamily::gamma, {{-1.0, 1.0}}), ConfigError);
    CHECK_THROWS_AS(validate(KernelFamily::gamma, {{1.0, 0.0}}), ConfigError);
    CHECK_NOTHROW(validate(KernelFamily::gamma, {{1.0, 1e-5}}));
}

TEST_CASE("kernel densities integrate to one") {
    Rng rng(11);
    for (int t = 0; t < 10; ++t) {
        const KernelPoint g{{-10.0 + 30.0 * rng.uniform(), 0.05 + 3.0 * rng.uniform()}};
        const double ig = oracle::simpson(
            [&](double x) { return std::exp(log_density(KernelFamily::gaussian, g, x)); }, g.first() - 12 * g.second(),
            g.first() + 12 * g.second(), 20001);
        CHECK(std::abs(ig - 1.0) < 1e-6);

        const KernelPoint m{{1.0 + 14.0 * rng.uniform(), 0.1 + 4.9 * rng.uniform()}};
        const double upper = (m.first() + 40.0 * std::sqrt(m.first()) + 40.0) / m.second();
        // tanh-sinh copes with the x^(shape - 1) behaviour at the origin.
        boost::math::quadrature::tanh_sinh<double> ts;
        const double im = ts.integrate([&](double x) { return std::exp(log_density(KernelFamily::gamma, m, x)); },
                                       0.0, upper);
        CHECK(std::abs(im - 1.0) < 1e-6);
    }
}

TEST_CASE("log density is continuous in the index") {
    const double h = 1e-7;
    for (double x : {0.3, 1.0, 4.0}) {
        const KernelPoint u{{2.0, 1.5}};
        const double base = log_density(KernelFamily::gamma, u, x);
        CHECK(std::abs(log_density(KernelFamily::gamma, {{2.0 + h, 1.5}}, x) - base) < 1e-5);
        CHECK(std::abs(log_density(KernelFamily::gamma, {{2.0, 1.5 + h}}, x) - base) < 1e-5);
        const double gb = log_density(KernelFamily::gaussian, u, x);
        CHECK(std::abs(log_density(KernelFamily::gaussian, {{2.0 + h, 1.5}}, x) - gb) < 1e-5);
        CHECK(std::abs(log_density(KernelFamily::gaussian, {{2.0, 1.5 + h}}, x) - gb) < 1e-5);
    }
}

TEST_CASE("kernel table agrees with direct evaluation") {
    const std::vector<KernelPoint> nodes = {{{1.0, 1.0}}, {{2.5, 0.3}}, {{14.0, 5.0}}, {{1.0, 1e-5}}};
    for (auto family : {KernelFamily::gaussian, KernelFamily::gamma}) {
        KernelTable table(family, nodes);
        std::vector<double> out(nodes.size());
        for (double x : {0.01, 0.5, 3.0, 17.0}) {
            table.log_densities(x, out);
            for (std::size_t j = 0; j < nodes.size(); ++j)
                CHECK(out[j] == doctest::Approx(log_density(family, nodes[j], x)).epsilon(1e-13));
        }
    }
}

TEST_CASE("kernel cdf limits") {
    CHECK(cdf(KernelFamily::gaussian, {{0.0, 1.0}}, 0.0) == doctest::Approx(0.5));
    CHECK(cdf(KernelFamily::gamma, {{1.0, 2.0}}, 1.0) == doctest::Approx(1.0 - std::exp(-2.0)));
    CHECK(cdf(KernelFamily::gamma, {{3.0, 1.0}}, -1.0) == 0.0);
}

TEST_CASE("family names round-trip") {
    for (auto f : {KernelFamily::gaussian, KernelFamily::gamma}) CHECK(kernel_family_from_string(to_string(f)) == f);
    CHECK_THROWS_AS(kernel_family_from_string("cauchy"), ConfigError);
}
