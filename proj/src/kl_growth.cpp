#include "preproc/kl_growth.hpp"

#include "preproc/errors.hpp"
#include "preproc/numeric.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

namespace preproc {

namespace {

using boost::math::quadrature::gauss_kronrod;

constexpr double kClampBelow = -1e-9;

struct Integral {
    double value = 0.0;
    double error = 0.0;
};

template <class F>
Integral integrate_panels(F&& f, const std::vector<double>& edges, unsigned max_depth = 8) {
    Integral total;
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
        if (!(edges[k + 1] > edges[k])) continue;
        double err = 0.0;
        total.value += gauss_kronrod<double, 31>::integrate(f, edges[k], edges[k + 1], max_depth, 1e-10, &err);
        total.error += err;
    }
    return total;
}

std::vector<double> uniform_edges(Domain d, std::size_t panels) {
    panels = std::max<std::size_t>(panels, 1);
    std::vector<double> e(panels + 1);
    for (std::size_t k = 0; k <= panels; ++k)
        e[k] = d.lower + (d.upper - d.lower) * static_cast<double>(k) / static_cast<double>(panels);
    e.back() = d.upper;
    return e;
}

// Panel edges equally spaced in probability between the default tail levels.
std::vector<double> quantile_edges(const Distribution& p, std::size_t panels) {
    panels = std::max<std::size_t>(panels, 1);
    std::vector<double> e(panels + 1);
    for (std::size_t k = 0; k <= panels; ++k) {
        const double level =
            kTailProbability + (1.0 - 2.0 * kTailProbability) * static_cast<double>(k) / static_cast<double>(panels);
        e[k] = p.quantile(level);
    }
    return e;
}

struct KlIntegrand {
    const LogDensityFn& log_p;
    const LogDensityFn& log_q;

    double operator()(double x) const {
        const double lp = log_p(x);
        if (lp == -kInf) return 0.0;
        const double lq = log_q(x);
        if (lq == -kInf) {
            std::ostringstream os;
            os << "q vanishes at x = " << x << " where p is positive";
            throw AbsoluteContinuityViolation(os.str());
        }
        return std::exp(lp) * (lp - lq);
    }
};

KlResult kl_on_edges(const LogDensityFn& log_p, const LogDensityFn& log_q, const std::vector<double>& edges,
                     unsigned max_depth = 8) {
    const Integral r = integrate_panels(KlIntegrand{log_p, log_q}, edges, max_depth);
    double v = r.value;
    if (v < 0.0 && v >= kClampBelow) v = 0.0;
    return {v, r.error};
}

// Size of the truncated tails' contribution to K(p, q): |p log(p/q)| is
// integrated between the 1e-14 and 1e-8 quantiles on each side, and the mass
// beyond 1e-14 is charged at the outermost log ratio.
double tail_error(const Distribution& p, const LogDensityFn& log_p, const LogDensityFn& log_q) {
    constexpr double kOuter = 1e-14;
    auto ratio = [&](double x) {
        const double lp = log_p(x), lq = log_q(x);
        if (lp == -kInf) return 0.0;
        if (!std::isfinite(lq)) return kInf;
        return std::abs(lp - lq);
    };
    auto f = [&](double x) {
        const double lp = log_p(x);
        return lp == -kInf ? 0.0 : std::exp(lp) * ratio(x);
    };
    double total = 0.0;
    for (const auto& [a, b] : {std::pair{kOuter, kTailProbability}, std::pair{1.0 - kTailProbability, 1.0 - kOuter}}) {
        const double lo = p.quantile(a), hi = p.quantile(b);
        const double edge = a == kOuter ? lo : hi;
        const double mass_ratio = 1.0 + ratio(edge);
        if (!std::isfinite(mass_ratio)) return kInf;
        if (hi > lo) total += std::abs(integrate_panels(f, uniform_edges({lo, hi}, 4), 4).value);
        total += kOuter * mass_ratio;
    }
    return total;
}

double negative_entropy_on(const Distribution& p, const std::vector<double>& edges, double* error = nullptr) {
    auto f = [&](double x) {
        const double lp = p.log_pdf(x);
        return lp == -kInf ? 0.0 : std::exp(lp) * lp;
    };
    const Integral r = integrate_panels(f, edges);
    if (error) *error = r.error;
    return r.value;
}

// KL on `cells` uniform cells over [0, upper], with neg_entropy = int_0^upper p log p.
double monotone_kl_on_cells(const Distribution& p, double upper, std::size_t cells, double neg_entropy) {
    std::vector<double> masses(cells), lengths(cells);
    const double width = upper / static_cast<double>(cells);
    double prev = 0.0;
    for (std::size_t k = 0; k < cells; ++k) {
        const double right = k + 1 == cells ? upper : width * static_cast<double>(k + 1);
        const double c = p.cdf(right);
        masses[k] = std::max(0.0, c - prev);
        lengths[k] = right - width * static_cast<double>(k);
        prev = c;
    }
    const std::vector<double> h = decreasing_step_projection(masses, lengths);
    double cross = 0.0;
    for (std::size_t k = 0; k < cells; ++k)
        if (masses[k] > 0.0) cross += masses[k] * std::log(h[k]);
    return neg_entropy - cross;
}

double edge_cdf(KernelFamily family, const KernelPoint& u, double x) { return cdf(family, u, x); }

} // namespace

Domain default_domain(const Distribution& p) {
    return {p.quantile(kTailProbability), p.quantile(1.0 - kTailProbability)};
}

KlResult kl_quadrature(const LogDensityFn& log_p, const LogDensityFn& log_q, Domain domain, std::size_t panels) {
    if (!(domain.lower < domain.upper) || !std::isfinite(domain.lower) || !std::isfinite(domain.upper))
        throw ConfigError("quadrature domain must be a finite interval with lower < upper");
    return kl_on_edges(log_p, log_q, uniform_edges(domain, panels));
}

KlResult kl_quadrature(const Distribution& p, const Distribution& q, std::size_t panels) {
    const auto lp = p.log_density_fn();
    const auto lq = q.log_density_fn();
    KlResult r = kl_on_edges(lp, lq, quantile_edges(p, panels));
    r.error += tail_error(p, lp, lq);
    return r;
}

double negative_entropy(const Distribution& p, Domain domain, std::size_t panels) {
    return negative_entropy_on(p, uniform_edges(domain, panels));
}

GaussianProjection kl_to_gaussian_family(const Distribution& p_star, std::size_t panels) {
    GaussianProjection out;
    out.mean = p_star.mean();
    out.variance = p_star.variance();
    if (!(out.variance > 0.0) || !std::isfinite(out.variance))
        throw ConfigError("Gaussian projection needs P* with finite positive variance");
    const double sd = std::sqrt(out.variance);
    const KlResult at = kl_quadrature(p_star, Distribution::normal(out.mean, sd), panels);
    out.kl = at.value;
    out.error = at.error;
    double best = out.kl;
    for (int dm = -1; dm <= 1; ++dm) {
        for (int dv = -1; dv <= 1; ++dv) {
            if (dm == 0 && dv == 0) continue;
            const double m = out.mean + 0.05 * sd * dm;
            const double v = out.variance * (1.0 + 0.05 * dv);
            best = std::min(best, kl_quadrature(p_star, Distribution::normal(m, std::sqrt(v)), panels).value);
        }
    }
    out.check_improvement = out.kl - best;
    if (out.check_improvement > 1e-6)
        throw SolverDidNotConverge("moment-matched Gaussian is not a local KL minimizer", out.kl,
                                   out.check_improvement);
    return out;
}

MonotoneProjection kl_to_monotone_class(const Distribution& p_star, std::size_t cells) {
    if (p_star.support_lower() != 0.0)
        throw ConfigError("monotone projection needs P* supported on (0, inf)");
    if (cells < 2) throw ConfigError("monotone projection needs at least 2 cells");
    MonotoneProjection out;
    out.cells = cells;
    out.upper = p_star.quantile(1.0 - kTailProbability);
    std::vector<double> edges = quantile_edges(p_star, 256);
    edges.front() = 0.0;
    double quad_error = 0.0;
    const double neg_entropy = negative_entropy_on(p_star, edges, &quad_error);
    out.kl = monotone_kl_on_cells(p_star, out.upper, cells, neg_entropy);
    const double coarse = monotone_kl_on_cells(p_star, out.upper, std::max<std::size_t>(cells / 2, 1), neg_entropy);
    out.error = std::abs(out.kl - coarse) + quad_error + 2.0 * kTailProbability;
    if (out.kl < 0.0 && out.kl >= kClampBelow) out.kl = 0.0;
    return out;
}

MixtureProjection kl_to_mixture_grid(const Distribution& p_star, KernelFamily family, const IndexGrid& grid,
                                     const MixtureProjectionOptions& options) {
    if (options.cells < 1) throw ConfigError("mixture projection needs at least one cell");
    if (options.max_iterations < 1) throw ConfigError("mixture projection needs max_iterations >= 1");
    const Domain d = default_domain(p_star);
    // Edges: support lower end, cells.. inner edges, +inf.
    std::vector<double> edges;
    edges.reserve(options.cells + 3);
    const double lo = std::max(p_star.support_lower(), support_of(family) == Support::positive_half_line ? 0.0 : -kInf);
    edges.push_back(lo);
    for (std::size_t k = 0; k <= options.cells; ++k)
        edges.push_back(d.lower + (d.upper - d.lower) * static_cast<double>(k) / static_cast<double>(options.cells));
    edges.push_back(kInf);

    std::vector<double> pi;
    std::vector<std::size_t> kept; // cell index q -> edges[q], edges[q + 1]
    {
        double prev = lo == -kInf ? 0.0 : p_star.cdf(lo);
        for (std::size_t q = 0; q + 1 < edges.size(); ++q) {
            const double c = edges[q + 1] == kInf ? 1.0 : p_star.cdf(edges[q + 1]);
            const double m = c - prev;
            prev = c;
            if (m > 0.0) {
                pi.push_back(m);
                kept.push_back(q);
            }
        }
    }
    if (p_star.support_lower() < lo && p_star.cdf(lo) > 0.0)
        throw AbsoluteContinuityViolation("P* puts mass outside the kernel family's support");
    double pi_total = 0.0;
    for (double m : pi) pi_total += m;
    for (double& m : pi) m /= pi_total;

    const std::size_t G = grid.size();
    const std::size_t Q = pi.size();
    std::vector<double> kappa(G * Q);
    std::vector<double> cdf_edges(edges.size());
    for (std::size_t j = 0; j < G; ++j) {
        const KernelPoint& u = grid.nodes()[j];
        for (std::size_t e = 0; e < edges.size(); ++e) cdf_edges[e] = edge_cdf(family, u, edges[e]);
        for (std::size_t i = 0; i < Q; ++i) {
            const std::size_t q = kept[i];
            kappa[j * Q + i] = std::max(0.0, cdf_edges[q + 1] - cdf_edges[q]);
        }
    }

    std::vector<double> mix(Q), ratio(Q);
    // kl and gap = max_j D_j - 1 at w, with D_j = sum_i kappa_ji pi_i / mix_i.
    // kl is +inf when w leaves a charged cell uncovered.
    auto evaluate = [&](const std::vector<double>& w, std::vector<double>& D) {
        std::fill(mix.begin(), mix.end(), 0.0);
        for (std::size_t j = 0; j < G; ++j) {
            if (w[j] == 0.0) continue;
            const double* row = &kappa[j * Q];
            for (std::size_t i = 0; i < Q; ++i) mix[i] += w[j] * row[i];
        }
        double kl = 0.0;
        for (std::size_t i = 0; i < Q; ++i) {
            if (!(mix[i] > 0.0)) return std::pair{kInf, kInf};
            kl += pi[i] * std::log(pi[i] / mix[i]);
            ratio[i] = pi[i] / mix[i];
        }
        double dmax = -kInf;
        for (std::size_t j = 0; j < G; ++j) {
            const double* row = &kappa[j * Q];
            double s = 0.0;
            for (std::size_t i = 0; i < Q; ++i) s += row[i] * ratio[i];
            D[j] = s;
            dmax = std::max(dmax, s);
        }
        return std::pair{kl, dmax - 1.0};
    };
    auto em_step = [&](const std::vector<double>& w, const std::vector<double>& D, std::vector<double>& next) {
        double total = 0.0;
        for (std::size_t j = 0; j < G; ++j) total += next[j] = w[j] * D[j];
        for (double& v : next) v /= total;
    };

    std::vector<double> psi(G, 1.0 / static_cast<double>(G)), D(G);
    std::vector<double> psi1(G), D1(G), psi2(G), D2(G), trial(G), Dt(G), stab(G), Ds(G);
    MixtureProjection out;
    auto [kl, gap] = evaluate(psi, D);
    if (!std::isfinite(kl)) throw AbsoluteContinuityViolation("every grid kernel vanishes on a cell charged by P*");
    out.objective_trace.push_back(kl);
    constexpr double kGapStop = 1e-7;
    // Each iteration is one SQUAREM cycle: two EM steps, an extrapolation
    // along them, and one stabilizing EM step. The cycle keeps the plain EM
    // result unless the extrapolated point has a lower objective, so the
    // objective trace never increases.
    for (int it = 1; it <= options.max_iterations; ++it) {
        em_step(psi, D, psi1);
        evaluate(psi1, D1);
        em_step(psi1, D1, psi2);
        auto best = evaluate(psi2, D2);
        double rr = 0.0, vv = 0.0;
        for (std::size_t j = 0; j < G; ++j) {
            const double r = psi1[j] - psi[j];
            const double v = psi2[j] - 2.0 * psi1[j] + psi[j];
            rr += r * r;
            vv += v * v;
        }
        bool extrapolated = false;
        if (vv > 0.0) {
            double step = std::min(-1.0, -std::sqrt(rr / vv));
            for (int shrink = 0; shrink < 30 && step < -1.0; ++shrink) {
                bool nonnegative = true;
                for (std::size_t j = 0; j < G; ++j) {
                    const double r = psi1[j] - psi[j];
                    const double v = psi2[j] - 2.0 * psi1[j] + psi[j];
                    trial[j] = psi[j] - 2.0 * step * r + step * step * v;
                    nonnegative = nonnegative && trial[j] >= 0.0;
                }
                if (nonnegative) break;
                step = 0.5 * (step - 1.0);
                if (step > -1.0 - 1e-3) step = -1.0;
            }
            if (step < -1.0) {
                double total = 0.0;
                for (double t : trial) total += t;
                for (double& t : trial) t /= total;
                const auto et = evaluate(trial, Dt);
                if (std::isfinite(et.first)) {
                    em_step(trial, Dt, stab);
                    const auto es = evaluate(stab, Ds);
                    if (es.first < best.first) {
                        psi.swap(stab);
                        D.swap(Ds);
                        best = es;
                        extrapolated = true;
                    }
                }
            }
        }
        if (!extrapolated) {
            psi.swap(psi2);
            D.swap(D2);
        }
        const double prev = kl;
        std::tie(kl, gap) = best;
        out.objective_trace.push_back(kl);
        out.iterations = it;
        if (std::abs(prev - kl) <= options.relative_tolerance * std::max(std::abs(kl), 1.0) || gap <= kGapStop) {
            out.converged = true;
            break;
        }
    }
    out.kl = std::max(kl, 0.0);
    out.gap = std::max(gap, 0.0);
    if (!out.converged)
        throw SolverDidNotConverge("mixture projection EM hit the iteration cap", out.kl, out.gap);
    out.weights = psi;

    std::vector<double> log_w(G);
    for (std::size_t j = 0; j < G; ++j) log_w[j] = psi[j] > 0.0 ? std::log(psi[j]) : -kInf;
    const KernelTable table(family, grid.nodes());
    std::vector<double> scratch(G);
    const LogDensityFn log_q = [&](double x) {
        if (!in_support(family, x)) return -kInf;
        return mixture_log_density(log_w, table, x, scratch);
    };
    const LogDensityFn log_p = p_star.log_density_fn();
    // A cheap fixed rule on many panels: each evaluation touches every kernel.
    KlResult cont = kl_on_edges(log_p, log_q, quantile_edges(p_star, 512), 2);
    out.kl_continuous = cont.value;
    return out;
}

LogConcaveProjection kl_to_logconcave_class(const Distribution& p_star, std::size_t points) {
    if (points < 3) throw ConfigError("log-concave projection needs at least 3 points");
    const Domain d = default_domain(p_star);
    std::vector<double> x(points), w(points);
    const double width = (d.upper - d.lower) / static_cast<double>(points);
    double prev = p_star.cdf(d.lower);
    for (std::size_t k = 0; k < points; ++k) {
        const double right = k + 1 == points ? d.upper : d.lower + width * static_cast<double>(k + 1);
        const double c = p_star.cdf(right);
        x[k] = d.lower + width * (static_cast<double>(k) + 0.5);
        w[k] = std::max(0.0, c - prev);
        prev = c;
    }
    double total = 0.0;
    for (double v : w) total += v;
    const LogConcaveFit fit = fit_logconcave(x, w);
    double cross = 0.0;
    for (std::size_t k = 0; k < points; ++k)
        if (w[k] > 0.0) cross += w[k] / total * fit.log_density(x[k]);
    const double neg_entropy = negative_entropy_on(p_star, quantile_edges(p_star, 256));
    return {std::max(0.0, neg_entropy - cross), points};
}

GrowthRateReport growth_rate(const Distribution& p_star, const NullSpec& null, KernelFamily family,
                             const IndexGrid& grid, const MixtureProjectionOptions& mixture_options) {
    GrowthRateReport r;
    json null_detail = {{"class", to_string(null.cls)}};
    switch (null.cls) {
    case NullClass::gaussian: {
        const auto g = kl_to_gaussian_family(p_star);
        r.kl_null = g.kl;
        null_detail["method"] = "moment-matched Gaussian, adaptive Gauss-Kronrod";
        null_detail["error"] = g.error;
        null_detail["mean"] = g.mean;
        null_detail["variance"] = g.variance;
        break;
    }
    case NullClass::monotone: {
        const auto m = kl_to_monotone_class(p_star);
        r.kl_null = m.kl;
        null_detail["method"] = "PAVA on CDF cell masses";
        null_detail["cells"] = m.cells;
        null_detail["error"] = m.error;
        break;
    }
    case NullClass::logconcave: {
        const auto l = kl_to_logconcave_class(p_star);
        r.kl_null = l.kl;
        null_detail["method"] = "weighted log-concave MLE on cell midpoints";
        null_detail["points"] = l.points;
        break;
    }
    case NullClass::simple:
    case NullClass::finite: {
        double best = kInf;
        double err = 0.0;
        for (const auto& member : null.members) {
            try {
                const auto k = kl_quadrature(p_star, member);
                if (k.value < best) {
                    best = k.value;
                    err = k.error;
                }
            } catch (const AbsoluteContinuityViolation&) {
            }
        }
        r.kl_null = best;
        null_detail["method"] = "adaptive Gauss-Kronrod, minimum over members";
        null_detail["error"] = err;
        break;
    }
    }
    const auto mix = kl_to_mixture_grid(p_star, family, grid, mixture_options);
    r.kl_mixture = mix.kl_continuous;
    r.delta = r.kl_null - r.kl_mixture;
    r.quadrature = {{"null", null_detail},
                    {"mixture",
                     {{"method", "EM on CDF cell masses"},
                      {"cells", mixture_options.cells},
                      {"iterations", mix.iterations},
                      {"converged", mix.converged},
                      {"gap", mix.gap},
                      {"kl_cells", mix.kl},
                      {"kl_continuous", mix.kl_continuous}}}};
    return r;
}

json to_json(const GrowthRateReport& r) {
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    return {{"kl_null", num(r.kl_null)},
            {"kl_mixture", num(r.kl_mixture)},
            {"delta", num(r.delta)},
            {"quadrature", r.quadrature}};
}

} // namespace preproc
