#include "preproc/distributions.hpp"

#include "preproc/errors.hpp"
#include "preproc/numeric.hpp"

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <sstream>

namespace preproc {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double normal_log_pdf(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * std::log(var) - kLogSqrt2Pi - 0.5 * d * d / var;
}

double normal_cdf(double x, double mean, double sd) {
    return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0)));
}

void check_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be positive and finite");
}

void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw ConfigError(std::string(what) + " must be finite");
}

} // namespace

Distribution::Distribution(Variant v) : v_(std::move(v)) {
    std::visit(overloaded{
                   [](const NormalDist& d) {
                       check_finite(d.mean, "normal mean");
                       check_positive(d.sd, "normal sd");
                   },
                   [](const GammaDist& d) {
                       check_positive(d.shape, "gamma shape");
                       check_positive(d.rate, "gamma rate");
                   },
                   [](const LaplaceDist& d) {
                       check_finite(d.location, "laplace location");
                       check_positive(d.scale, "laplace scale");
                   },
                   [](NormalMixtureDist& d) {
                       if (d.components.empty()) throw ConfigError("normal mixture needs at least one component");
                       double total = 0.0;
                       for (const auto& c : d.components) {
                           check_positive(c.weight, "mixture weight");
                           check_finite(c.mean, "mixture mean");
                           check_positive(c.variance, "mixture variance");
                           total += c.weight;
                       }
                       for (auto& c : d.components) c.weight /= total;
                   },
               },
               v_);
}

Distribution Distribution::bimodal_normal(double mu) {
    return normal_mixture({{0.75, 0.0, 2.0}, {0.25, mu, 2.0}});
}

Distribution Distribution::from_kernel(KernelFamily family, const KernelPoint& u) {
    validate(family, u);
    if (family == KernelFamily::gaussian) return normal(u.first(), u.second());
    return gamma(u.first(), u.second());
}

double Distribution::log_pdf(double x) const {
    if (std::isnan(x)) return -kInf;
    return std::visit(overloaded{
                          [x](const NormalDist& d) { return normal_log_pdf(x, d.mean, d.sd * d.sd); },
                          [x](const GammaDist& d) {
                              if (!(x > 0.0) || x == kInf) return -kInf;
                              return d.shape * std::log(d.rate) - boost::math::lgamma(d.shape) +
                                     (d.shape - 1.0) * std::log(x) - d.rate * x;
                          },
                          [x](const LaplaceDist& d) {
                              return -std::log(2.0 * d.scale) - std::abs(x - d.location) / d.scale;
                          },
                          [x](const NormalMixtureDist& d) {
                              double acc = -kInf;
                              for (const auto& c : d.components)
                                  acc = log_add_exp(acc, std::log(c.weight) + normal_log_pdf(x, c.mean, c.variance));
                              return acc;
                          },
                      },
                      v_);
}

double Distribution::cdf(double x) const {
    if (x == kInf) return 1.0;
    if (x == -kInf) return 0.0;
    return std::visit(overloaded{
                          [x](const NormalDist& d) { return normal_cdf(x, d.mean, d.sd); },
                          [x](const GammaDist& d) {
                              if (x <= 0.0) return 0.0;
                              return boost::math::gamma_p(d.shape, d.rate * x);
                          },
                          [x](const LaplaceDist& d) {
                              const double z = (x - d.location) / d.scale;
                              return z < 0.0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
                          },
                          [x](const NormalMixtureDist& d) {
                              double acc = 0.0;
                              for (const auto& c : d.components)
                                  acc += c.weight * normal_cdf(x, c.mean, std::sqrt(c.variance));
                              return acc;
                          },
                      },
                      v_);
}

double Distribution::quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("quantile level must lie in (0, 1)");
    return std::visit(overloaded{
                          [p](const NormalDist& d) {
                              return boost::math::quantile(boost::math::normal_distribution<>(d.mean, d.sd), p);
                          },
                          [p](const GammaDist& d) {
                              return boost::math::quantile(boost::math::gamma_distribution<>(d.shape, 1.0 / d.rate), p);
                          },
                          [p](const LaplaceDist& d) {
                              return p < 0.5 ? d.location + d.scale * std::log(2.0 * p)
                                             : d.location - d.scale * std::log(2.0 * (1.0 - p));
                          },
                          [this, p](const NormalMixtureDist& d) {
                              double lo = kInf, hi = -kInf;
                              const double z = boost::math::quantile(boost::math::normal_distribution<>(), p);
                              // The mixture quantile lies between the extreme component quantiles.
                              for (const auto& c : d.components) {
                                  const double s = std::sqrt(c.variance);
                                  lo = std::min(lo, c.mean - std::abs(z) * s - s);
                                  hi = std::max(hi, c.mean + std::abs(z) * s + s);
                              }
                              for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++it) {
                                  const double mid = 0.5 * (lo + hi);
                                  (cdf(mid) < p ? lo : hi) = mid;
                              }
                              return 0.5 * (lo + hi);
                          },
                      },
                      v_);
}

double Distribution::mean() const {
    return std::visit(overloaded{
                          [](const NormalDist& d) { return d.mean; },
                          [](const GammaDist& d) { return d.shape / d.rate; },
                          [](const LaplaceDist& d) { return d.location; },
                          [](const NormalMixtureDist& d) {
                              double m = 0.0;
                              for (const auto& c : d.components) m += c.weight * c.mean;
                              return m;
                          },
                      },
                      v_);
}

double Distribution::variance() const {
    return std::visit(overloaded{
                          [](const NormalDist& d) { return d.sd * d.sd; },
                          [](const GammaDist& d) { return d.shape / (d.rate * d.rate); },
                          [](const LaplaceDist& d) { return 2.0 * d.scale * d.scale; },
                          [this](const NormalMixtureDist& d) {
                              const double m = mean();
                              double v = 0.0;
                              for (const auto& c : d.components)
                                  v += c.weight * (c.variance + (c.mean - m) * (c.mean - m));
                              return v;
                          },
                      },
                      v_);
}

double Distribution::support_lower() const {
    return std::holds_alternative<GammaDist>(v_) ? 0.0 : -kInf;
}

bool Distribution::in_support(double x) const {
    if (!std::isfinite(x)) return false;
    return !std::holds_alternative<GammaDist>(v_) || x > 0.0;
}

double Distribution::sample(Rng& rng) const {
    return std::visit(overloaded{
                          [&rng](const NormalDist& d) { return d.mean + d.sd * rng.normal(); },
                          [&rng](const GammaDist& d) { return rng.gamma(d.shape) / d.rate; },
                          [&rng](const LaplaceDist& d) {
                              const double u = rng.uniform() - 0.5;
                              const double sign = u < 0.0 ? -1.0 : 1.0;
                              return d.location - d.scale * sign * std::log1p(-2.0 * std::abs(u));
                          },
                          [&rng](const NormalMixtureDist& d) {
                              const double u = rng.uniform();
                              double acc = 0.0;
                              const NormalComponent* pick = &d.components.back();
                              for (const auto& c : d.components) {
                                  acc += c.weight;
                                  if (u < acc) {
                                      pick = &c;
                                      break;
                                  }
                              }
                              return pick->mean + std::sqrt(pick->variance) * rng.normal();
                          },
                      },
                      v_);
}

std::string Distribution::describe() const {
    std::ostringstream os;
    os.precision(17);
    std::visit(overloaded{
                   [&os](const NormalDist& d) { os << "normal(mean=" << d.mean << ", sd=" << d.sd << ")"; },
                   [&os](const GammaDist& d) { os << "gamma(shape=" << d.shape << ", rate=" << d.rate << ")"; },
                   [&os](const LaplaceDist& d) {
                       os << "laplace(location=" << d.location << ", scale=" << d.scale << ")";
                   },
                   [&os](const NormalMixtureDist& d) {
                       os << "normal_mixture(";
                       for (std::size_t i = 0; i < d.components.size(); ++i) {
                           const auto& c = d.components[i];
                           os << (i ? ", " : "") << c.weight << "*N(" << c.mean << ", var=" << c.variance << ")";
                       }
                       os << ")";
                   },
               },
               v_);
    return os.str();
}

LogDensityFn Distribution::log_density_fn() const {
    return [d = *this](double x) { return d.log_pdf(x); };
}

std::vector<double> sample_n(const Distribution& d, std::size_t n, Rng& rng) {
    std::vector<double> out(n);
    for (auto& x : out) x = d.sample(rng);
    return out;
}

} // namespace preproc

namespace preproc {

Distribution distribution_from_json(const json& j) {
    constexpr std::string_view where = "distribution";
    if (!j.is_object()) throw ConfigError("distribution: expected a JSON object");
    const auto type = require<std::string>(j, "type", where);
    if (type == "normal") {
        expect_keys(j, {"type", "mean", "sd"}, where);
        return Distribution::normal(optional<double>(j, "mean", 0.0, where), optional<double>(j, "sd", 1.0, where));
    }
    if (type == "gamma") {
        expect_keys(j, {"type", "shape", "rate"}, where);
        return Distribution::gamma(require<double>(j, "shape", where), optional<double>(j, "rate", 1.0, where));
    }
    if (type == "exponential") {
        expect_keys(j, {"type", "rate"}, where);
        return Distribution::exponential(optional<double>(j, "rate", 1.0, where));
    }
    if (type == "laplace") {
        expect_keys(j, {"type", "location", "scale"}, where);
        return Distribution::laplace(optional<double>(j, "location", 0.0, where),
                                     optional<double>(j, "scale", 1.0, where));
    }
    if (type == "bimodal_normal") {
        expect_keys(j, {"type", "mu"}, where);
        return Distribution::bimodal_normal(require<double>(j, "mu", where));
    }
    if (type == "normal_mixture") {
        expect_keys(j, {"type", "components"}, where);
        std::vector<NormalComponent> comps;
        for (const auto& c : j.at("components")) {
            expect_keys(c, {"weight", "mean", "variance"}, "mixture component");
            comps.push_back({require<double>(c, "weight", "mixture component"),
                             require<double>(c, "mean", "mixture component"),
                             require<double>(c, "variance", "mixture component")});
        }
        return Distribution::normal_mixture(std::move(comps));
    }
    throw ConfigError("distribution: unknown type '" + type + "'");
}

json distribution_to_json(const Distribution& d) {
    return std::visit(overloaded{
                          [](const NormalDist& n) -> json {
                              return {{"type", "normal"}, {"mean", n.mean}, {"sd", n.sd}};
                          },
                          [](const GammaDist& g) -> json {
                              return {{"type", "gamma"}, {"shape", g.shape}, {"rate", g.rate}};
                          },
                          [](const LaplaceDist& l) -> json {
                              return {{"type", "laplace"}, {"location", l.location}, {"scale", l.scale}};
                          },
                          [](const NormalMixtureDist& m) -> json {
                              json comps = json::array();
                              for (const auto& c : m.components)
                                  comps.push_back({{"weight", c.weight}, {"mean", c.mean}, {"variance", c.variance}});
                              return {{"type", "normal_mixture"}, {"components", comps}};
                          },
                      },
                      d.variant());
}

} // namespace preproc
