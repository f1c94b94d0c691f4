#include "preproc/kernels.hpp"

#include "preproc/errors.hpp"
#include "preproc/numeric.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>

namespace preproc {

Support support_of(KernelFamily family) {
    return family == KernelFamily::gamma ? Support::positive_half_line : Support::real_line;
}

std::string_view to_string(KernelFamily family) {
    return family == KernelFamily::gamma ? "gamma" : "gaussian";
}

KernelFamily kernel_family_from_string(std::string_view name) {
    if (name == "gaussian") return KernelFamily::gaussian;
    if (name == "gamma") return KernelFamily::gamma;
    throw ConfigError("unknown kernel family '" + std::string(name) + "' (expected gaussian or gamma)");
}

bool in_support(KernelFamily family, double x) {
    if (!std::isfinite(x)) return false;
    return family == KernelFamily::gaussian || x > 0.0;
}

void validate(KernelFamily family, const KernelPoint& u) {
    if (!std::isfinite(u.first()) || !std::isfinite(u.second()))
        throw ConfigError("kernel index must be finite");
    if (u.second() <= 0.0)
        throw ConfigError(family == KernelFamily::gaussian ? "gaussian sd must be positive"
                                                           : "gamma rate must be positive");
    if (family == KernelFamily::gamma && u.first() <= 0.0)
        throw ConfigError("gamma shape must be positive");
}

namespace {

void require_support(KernelFamily family, double x) {
    if (!in_support(family, x))
        throw UnsupportedObservation("observation " + std::to_string(x) + " outside the support of the " +
                                     std::string(to_string(family)) + " kernel family");
}

} // namespace

double log_density(KernelFamily family, const KernelPoint& u, double x) {
    require_support(family, x);
    if (family == KernelFamily::gaussian) {
        const double z = (x - u.first()) / u.second();
        return -std::log(u.second()) - kLogSqrt2Pi - 0.5 * z * z;
    }
    const double shape = u.first();
    const double rate = u.second();
    return shape * std::log(rate) - boost::math::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double cdf(KernelFamily family, const KernelPoint& u, double x) {
    if (family == KernelFamily::gaussian) {
        if (x == kInf) return 1.0;
        if (x == -kInf) return 0.0;
        return 0.5 * std::erfc(-(x - u.first()) / (u.second() * std::sqrt(2.0)));
    }
    if (x <= 0.0) return 0.0;
    if (x == kInf) return 1.0;
    return boost::math::gamma_p(u.first(), u.second() * x);
}

KernelTable::KernelTable(KernelFamily family, std::span<const KernelPoint> nodes) : family_(family) {
    offset_.reserve(nodes.size());
    a_.reserve(nodes.size());
    b_.reserve(nodes.size());
    for (const auto& u : nodes) {
        validate(family, u);
        if (family == KernelFamily::gaussian) {
            offset_.push_back(-std::log(u.second()) - kLogSqrt2Pi);
            a_.push_back(u.first());
            b_.push_back(-0.5 / (u.second() * u.second()));
        } else {
            offset_.push_back(u.first() * std::log(u.second()) - boost::math::lgamma(u.first()));
            a_.push_back(u.first() - 1.0);
            b_.push_back(-u.second());
        }
    }
}

void KernelTable::log_densities(double x, std::span<double> out) const {
    require_support(family_, x);
    const std::size_t n = offset_.size();
    if (family_ == KernelFamily::gaussian) {
        for (std::size_t j = 0; j < n; ++j) {
            const double d = x - a_[j];
            out[j] = offset_[j] + b_[j] * d * d;
        }
    } else {
        const double log_x = std::log(x);
        for (std::size_t j = 0; j < n; ++j) out[j] = offset_[j] + a_[j] * log_x + b_[j] * x;
    }
}

} // namespace preproc
