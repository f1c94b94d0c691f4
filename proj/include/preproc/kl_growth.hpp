#pragma once

#include "preproc/distributions.hpp"
#include "preproc/json_util.hpp"
#include "preproc/mixing.hpp"
#include "preproc/null_models.hpp"

#include <vector>

namespace preproc {

struct Domain {
    double lower = 0.0;
    double upper = 1.0;
};

inline constexpr double kTailProbability = 1e-8;

// [q(1e-8), q(1 - 1e-8)] of p.
Domain default_domain(const Distribution& p);

struct KlResult {
    double value = 0.0;
    double error = 0.0; // quadrature error estimate plus truncated tail mass bound
};

// int p log(p / q) over the domain with `panels` adaptive Gauss-Kronrod
// panels. Values in [-1e-9, 0) are clamped to 0. Throws
// AbsoluteContinuityViolation where q vanishes but p does not.
KlResult kl_quadrature(const LogDensityFn& log_p, const LogDensityFn& log_q, Domain domain, std::size_t panels = 64);
// Same over default_domain(p), with the truncated tails folded into error.
KlResult kl_quadrature(const Distribution& p, const Distribution& q, std::size_t panels = 64);

// int p log p over the domain.
double negative_entropy(const Distribution& p, Domain domain, std::size_t panels = 64);

struct GaussianProjection {
    double kl = 0.0;
    double error = 0.0;
    double mean = 0.0;
    double variance = 0.0;
    double check_improvement = 0.0; // best decrease found by the local (m, v) search
};

// K(P*, Gaussians) at the moment-matched N(m, v), then confirms that a
// local 3x3 search over (m, v) does not lower the value by more than 1e-6.
GaussianProjection kl_to_gaussian_family(const Distribution& p_star, std::size_t panels = 64);

struct MonotoneProjection {
    double kl = 0.0;
    double error = 0.0;
    std::size_t cells = 0;
    double upper = 0.0;
};

// K(P*, decreasing densities on (0, inf)): PAVA on the cell masses of a
// uniform grid over [0, q(1 - 1e-8)] gives the slopes of the least concave
// majorant of the CDF.
MonotoneProjection kl_to_monotone_class(const Distribution& p_star, std::size_t cells = 20000);

struct MixtureProjectionOptions {
    std::size_t cells = 1000;
    int max_iterations = 2000;
    double relative_tolerance = 1e-9; // on |change in kl| / max(kl, 1)
};

struct MixtureProjection {
    double kl = 0.0;            // on cell masses: a lower bound for the continuous value at the same weights
    double kl_continuous = 0.0; // K(P*, fitted mixture) by quadrature: an upper bound for the infimum
    double gap = 0.0;        // max_j D_j - 1, an upper bound on kl minus its infimum
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace; // kl after each iteration
    std::vector<double> weights;
};

// inf over mixing weights psi of K(P*, sum_j psi_j p_{u_j}) on cell masses
// (every cell mass is an exact CDF difference), by EM multiplicative
// updates with SQUAREM extrapolation; one iteration is one cycle of three
// EM maps. Throws SolverDidNotConverge when the relative change has not
// dropped below tolerance within max_iterations.
MixtureProjection kl_to_mixture_grid(const Distribution& p_star, KernelFamily family, const IndexGrid& grid,
                                     const MixtureProjectionOptions& options = {});

struct LogConcaveProjection {
    double kl = 0.0;
    std::size_t points = 0;
};

// Discretized K(P*, log-concave densities): weighted log-concave MLE on
// cell midpoints carrying the cell masses.
LogConcaveProjection kl_to_logconcave_class(const Distribution& p_star, std::size_t points = 4000);

struct GrowthRateReport {
    double kl_null = 0.0;
    double kl_mixture = 0.0;
    double delta = 0.0;
    json quadrature; // methods, resolutions and error estimates
};

GrowthRateReport growth_rate(const Distribution& p_star, const NullSpec& null, KernelFamily family,
                             const IndexGrid& grid, const MixtureProjectionOptions& mixture_options = {});

json to_json(const GrowthRateReport& r);

} // namespace preproc
