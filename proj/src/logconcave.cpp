#include "preproc/errors.hpp"
#include "preproc/null_models.hpp"
#include "preproc/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace preproc {

namespace {

// I_p(d) = int_0^1 t^p exp(t d) dt for p = 0, 1, 2, with d <= 0.
void exp_moments(double d, double& i0, double& i1, double& i2) {
    if (d > -1.0) {
        double term = 1.0; // d^k / k!
        i0 = i1 = i2 = 0.0;
        for (int k = 0; k < 30; ++k) {
            i0 += term / (k + 1);
            i1 += term / (k + 2);
            i2 += term / (k + 3);
            term *= d / (k + 1);
        }
        return;
    }
    const double e = std::exp(d);
    i0 = (e - 1.0) / d;
    i1 = (e * (d - 1.0) + 1.0) / (d * d);
    i2 = (e * (d * d - 2.0 * d + 2.0) - 2.0) / (d * d * d);
}

// Integrals over t in [0, 1] of exp((1 - t) r + t s) times
// 1, t, 1 - t, t^2, (1 - t)^2 and t (1 - t).
struct Segment {
    double j00, j10, j01, j20, j02, j11;
};

Segment segment(double r, double s) {
    const bool flip = s > r;
    const double base = flip ? s : r;
    double i0, i1, i2;
    exp_moments(flip ? r - s : s - r, i0, i1, i2);
    const double e = std::exp(base);
    const double near = e * (i0 - i1);
    const double far = e * i1;
    const double near2 = e * (i0 - 2.0 * i1 + i2);
    const double far2 = e * i2;
    const double cross = e * (i1 - i2);
    if (!flip) return {e * i0, far, near, far2, near2, cross};
    return {e * i0, near, far, near2, far2, cross};
}

class ActiveSetSolver {
public:
    ActiveSetSolver(std::vector<double> x, std::vector<double> w) : x_(std::move(x)), w_(std::move(w)) {
        range_ = x_.back() - x_.front();
        knots_ = {0, x_.size() - 1};
        theta_ = {-std::log(range_), -std::log(range_)};
        refresh_data_coefficients();
    }

    int solve(const LogConcaveOptions& opt) {
        double previous = -kInf;
        for (int outer = 1; outer <= opt.max_iterations; ++outer) {
            solve_on_knots();
            const double value = objective(theta_);
            if (outer > 1 && value - previous <= opt.relative_tolerance * std::max(1.0, std::abs(value)))
                return outer;
            std::size_t best = 0;
            const double gain = best_new_knot(best);
            if (gain <= 1e-8 * range_) return outer;
            add_knot(best);
            previous = value;
        }
        throw SolverDidNotConverge("log-concave MLE did not converge", objective(theta_), kInf);
    }

    LogConcaveFit result() const {
        LogConcaveFit fit;
        double z = 0.0;
        for (std::size_t k = 0; k + 1 < knots_.size(); ++k)
            z += h(k) * segment(theta_[k], theta_[k + 1]).j00;
        const double log_z = std::log(z);
        for (std::size_t k = 0; k < knots_.size(); ++k) {
            fit.knots.push_back(x_[knots_[k]]);
            fit.log_density_at_knots.push_back(theta_[k] - log_z);
        }
        return fit;
    }

private:
    double h(std::size_t k) const { return x_[knots_[k + 1]] - x_[knots_[k]]; }

    // b_k = sum_i w_i * (barycentric coordinate of x_i on knot k).
    void refresh_data_coefficients() {
        b_.assign(knots_.size(), 0.0);
        for (std::size_t k = 0; k + 1 < knots_.size(); ++k) {
            const double left = x_[knots_[k]];
            const double len = h(k);
            for (std::size_t i = knots_[k]; i < knots_[k + 1]; ++i) {
                const double lambda = (x_[i] - left) / len;
                b_[k] += w_[i] * (1.0 - lambda);
                b_[k + 1] += w_[i] * lambda;
            }
        }
        b_.back() += w_.back();
    }

    double objective(const std::vector<double>& theta) const {
        double v = 0.0;
        for (std::size_t k = 0; k < theta.size(); ++k) v += b_[k] * theta[k];
        for (std::size_t k = 0; k + 1 < theta.size(); ++k) v -= h(k) * segment(theta[k], theta[k + 1]).j00;
        return v;
    }

    double slope_change(const std::vector<double>& v, std::size_t k) const {
        return (v[k + 1] - v[k]) / h(k) - (v[k] - v[k - 1]) / h(k - 1);
    }

    // Damped Newton on the current knot set; drops a knot whenever the
    // step would break concavity there.
    void solve_on_knots() {
        const std::size_t max_inner = 200 + 4 * x_.size();
        for (std::size_t it = 0; it < max_inner; ++it) {
            const std::size_t k = knots_.size();
            std::vector<double> grad(b_), diag(k, 0.0), off(k > 0 ? k - 1 : 0, 0.0);
            for (std::size_t s = 0; s + 1 < k; ++s) {
                const Segment seg = segment(theta_[s], theta_[s + 1]);
                const double len = h(s);
                grad[s] -= len * seg.j01;
                grad[s + 1] -= len * seg.j10;
                diag[s] += len * seg.j02;
                diag[s + 1] += len * seg.j20;
                off[s] = len * seg.j11;
            }
            // Solve (-Hessian) step = grad by the Thomas algorithm.
            std::vector<double> c(k, 0.0), step(grad);
            double denom = diag[0];
            for (std::size_t i = 0; i < k; ++i) {
                if (i > 0) {
                    denom = diag[i] - off[i - 1] * c[i - 1];
                    step[i] -= off[i - 1] * step[i - 1];
                }
                if (i + 1 < k) c[i] = off[i] / denom;
                step[i] /= denom;
            }
            for (std::size_t i = k - 1; i-- > 0;) step[i] -= c[i] * step[i + 1];

            double decrement = 0.0;
            for (std::size_t i = 0; i < k; ++i) decrement += grad[i] * step[i];
            if (!(decrement > 1e-15)) return;

            double t_max = kInf;
            std::size_t blocking = 0;
            for (std::size_t i = 1; i + 1 < k; ++i) {
                const double dc = slope_change(step, i);
                if (dc > 0.0) {
                    const double t = std::max(0.0, -slope_change(theta_, i) / dc);
                    if (t < t_max) {
                        t_max = t;
                        blocking = i;
                    }
                }
            }
            double t = std::min(1.0, t_max);
            const double base = objective(theta_);
            std::vector<double> trial(k);
            bool accepted = false;
            while (t > 1e-14) {
                for (std::size_t i = 0; i < k; ++i) trial[i] = theta_[i] + t * step[i];
                if (objective(trial) >= base + 1e-4 * t * decrement) {
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if (t_max <= 0.0) {
                drop_knot(blocking);
                continue;
            }
            if (!accepted) return;
            const bool blocked = t_max <= 1.0 && t == t_max;
            theta_ = trial;
            if (blocked) drop_knot(blocking);
        }
    }

    void drop_knot(std::size_t k) {
        knots_.erase(knots_.begin() + static_cast<std::ptrdiff_t>(k));
        theta_.erase(theta_.begin() + static_cast<std::ptrdiff_t>(k));
        refresh_data_coefficients();
    }

    std::vector<double> phi_at_points() const {
        std::vector<double> phi(x_.size());
        for (std::size_t k = 0; k + 1 < knots_.size(); ++k) {
            const double left = x_[knots_[k]];
            const double len = h(k);
            for (std::size_t i = knots_[k]; i <= knots_[k + 1]; ++i) {
                const double lambda = (x_[i] - left) / len;
                phi[i] = (1.0 - lambda) * theta_[k] + lambda * theta_[k + 1];
            }
        }
        return phi;
    }

    // Directional derivative of the objective along -(x - x_j)_+ for each
    // non-knot j; returns the largest and its index.
    double best_new_knot(std::size_t& best) const {
        const auto phi = phi_at_points();
        const std::size_t m = x_.size();
        std::vector<char> is_knot(m, 0);
        for (auto k : knots_) is_knot[k] = 1;
        double tail_int = 0.0, tail_moment = 0.0, data_moment = 0.0, data_tail = w_[m - 1];
        double best_gain = -kInf;
        for (std::size_t j = m - 1; j-- > 0;) {
            const double len = x_[j + 1] - x_[j];
            const Segment seg = segment(phi[j], phi[j + 1]);
            tail_moment += len * tail_int + len * len * seg.j10;
            tail_int += len * seg.j00;
            data_moment += len * data_tail;
            data_tail += w_[j];
            if (!is_knot[j]) {
                const double gain = tail_moment - data_moment;
                if (gain > best_gain) {
                    best_gain = gain;
                    best = j;
                }
            }
        }
        return best_gain;
    }

    void add_knot(std::size_t j) {
        const auto phi = phi_at_points();
        const auto pos = std::upper_bound(knots_.begin(), knots_.end(), j);
        const auto offset = pos - knots_.begin();
        knots_.insert(pos, j);
        theta_.insert(theta_.begin() + offset, phi[j]);
        refresh_data_coefficients();
    }

    std::vector<double> x_;
    std::vector<double> w_;
    double range_ = 1.0;
    std::vector<std::size_t> knots_;
    std::vector<double> theta_;
    std::vector<double> b_;
};

} // namespace

double LogConcaveFit::log_density(double x) const {
    if (knots.empty() || !(x >= knots.front() && x <= knots.back())) return -kInf;
    auto it = std::upper_bound(knots.begin(), knots.end(), x);
    if (it == knots.end()) return log_density_at_knots.back();
    const std::size_t k = static_cast<std::size_t>(it - knots.begin()) - 1;
    const double lambda = (x - knots[k]) / (knots[k + 1] - knots[k]);
    return (1.0 - lambda) * log_density_at_knots[k] + lambda * log_density_at_knots[k + 1];
}

double LogConcaveFit::integral() const {
    double z = 0.0;
    for (std::size_t k = 0; k + 1 < knots.size(); ++k)
        z += (knots[k + 1] - knots[k]) * segment(log_density_at_knots[k], log_density_at_knots[k + 1]).j00;
    return z;
}

double LogConcaveFit::max_slope_increase() const {
    double worst = -kInf;
    for (std::size_t k = 1; k + 1 < knots.size(); ++k) {
        const double left = (log_density_at_knots[k] - log_density_at_knots[k - 1]) / (knots[k] - knots[k - 1]);
        const double right = (log_density_at_knots[k + 1] - log_density_at_knots[k]) / (knots[k + 1] - knots[k]);
        worst = std::max(worst, right - left);
    }
    return worst;
}

LogConcaveFit fit_logconcave(std::span<const double> x, std::span<const double> weights,
                             const LogConcaveOptions& options) {
    if (!weights.empty() && weights.size() != x.size())
        throw ConfigError("log-concave fit: weights and points differ in length");
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (double v : x)
        if (!std::isfinite(v)) throw UnsupportedObservation("log-concave null needs finite observations");
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });

    std::vector<double> pts, w;
    for (std::size_t idx : order) {
        const double wi = weights.empty() ? 1.0 : weights[idx];
        if (!(wi >= 0.0) || !std::isfinite(wi)) throw ConfigError("log-concave fit: weights must be nonnegative");
        if (wi == 0.0) continue;
        if (!pts.empty() && pts.back() == x[idx])
            w.back() += wi;
        else {
            pts.push_back(x[idx]);
            w.push_back(wi);
        }
    }
    if (pts.size() < 2) throw DegenerateNull("log-concave null needs at least 2 distinct observations");
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& v : w) v /= total;

    ActiveSetSolver solver(std::move(pts), std::move(w));
    const int iterations = solver.solve(options);
    LogConcaveFit fit = solver.result();
    fit.iterations = iterations;
    return fit;
}

NullFit logconcave_loglik(std::span<const double> x) {
    LogConcaveFit fit = fit_logconcave(x);
    double log_lik = 0.0;
    for (double v : x) log_lik += fit.log_density(v);
    return NullFit{log_lik, std::move(fit), x.size()};
}

} // namespace preproc
