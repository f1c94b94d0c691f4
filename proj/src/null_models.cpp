#include "preproc/null_models.hpp"

#include "preproc/errors.hpp"
#include "preproc/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace preproc {

namespace detail {
NullFit grenander_presorted(std::span<const double> sorted);
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_positive(double x) {
    if (!(x > 0.0) || !std::isfinite(x))
        throw UnsupportedObservation("monotone null needs positive observations (got " + std::to_string(x) + ")");
}

void require_finite(double x) {
    if (!std::isfinite(x)) throw UnsupportedObservation("observation must be finite");
}

} // namespace

NullFit gaussian_fit_from_moments(const RunningMoments& m) {
    if (m.n < 2) throw DegenerateNull("gaussian null needs at least 2 observations");
    if (m.m2 <= 0.0) throw DegenerateNull("gaussian null: all observations are equal");
    const double n = static_cast<double>(m.n);
    const double var = m.m2 / n;
    const double log_lik = -0.5 * n * std::log(2.0 * std::numbers::pi * var) - 0.5 * n;
    return NullFit{log_lik, GaussianFit{m.mean, var}, m.n};
}

NullFit gaussian_null_loglik(std::span<const double> x) {
    RunningMoments m;
    for (double v : x) {
        require_finite(v);
        m.add(v);
    }
    return gaussian_fit_from_moments(m);
}

NullFit simple_null_loglik(const LogDensityFn& log_p0, std::span<const double> x) {
    double s = 0.0;
    for (double v : x) {
        const double lp = log_p0(v);
        if (!std::isfinite(lp))
            throw UnsupportedObservation("observation " + std::to_string(v) + " outside the null density support");
        s += lp;
    }
    return NullFit{s, SimpleFit{}, x.size()};
}

NullFit simple_null_loglik(const Distribution& p0, std::span<const double> x) {
    NullFit f = simple_null_loglik(p0.log_density_fn(), x);
    f.fit = SimpleFit{p0.describe()};
    return f;
}

json to_json(const NullFit& f) {
    json j = {{"log_lik_sup", f.log_lik_sup}, {"n", f.n}};
    std::visit(overloaded{
                   [&](const GaussianFit& g) {
                       j["class"] = "gaussian";
                       j["mean"] = g.mean;
                       j["variance"] = g.variance;
                   },
                   [&](const GrenanderFit& g) {
                       j["class"] = "monotone";
                       j["knots"] = g.knots;
                       j["heights"] = g.heights;
                   },
                   [&](const LogConcaveFit& g) {
                       j["class"] = "logconcave";
                       j["knots"] = g.knots;
                       j["log_density"] = g.log_density_at_knots;
                       j["iterations"] = g.iterations;
                   },
                   [&](const SimpleFit& g) {
                       j["class"] = "simple";
                       j["density"] = g.density;
                   },
                   [&](const FiniteFit& g) {
                       j["class"] = "finite";
                       j["best_index"] = g.best_index;
                   },
               },
               f.fit);
    return j;
}

std::string to_string(NullClass cls) {
    switch (cls) {
    case NullClass::gaussian: return "gaussian";
    case NullClass::monotone: return "monotone";
    case NullClass::logconcave: return "logconcave";
    case NullClass::simple: return "simple";
    case NullClass::finite: return "finite";
    }
    return "unknown";
}

json null_spec_to_json(const NullSpec& spec) {
    json j = {{"class", to_string(spec.cls)}};
    if (spec.cls == NullClass::simple) j["density"] = distribution_to_json(spec.members.front());
    if (spec.cls == NullClass::finite) {
        j["members"] = json::array();
        for (const auto& d : spec.members) j["members"].push_back(distribution_to_json(d));
    }
    return j;
}

NullSpec null_spec_from_json(const json& j) {
    constexpr std::string_view where = "null";
    expect_keys(j, {"class", "density", "members"}, where);
    const auto cls = require<std::string>(j, "class", where);
    auto forbid = [&](const char* key) {
        if (j.contains(key)) throw ConfigError("null: field '" + std::string(key) + "' not allowed for class " + cls);
    };
    if (cls == "gaussian" || cls == "monotone" || cls == "logconcave") {
        forbid("density");
        forbid("members");
        if (cls == "gaussian") return NullSpec::gaussian();
        if (cls == "monotone") return NullSpec::monotone();
        return NullSpec::logconcave();
    }
    if (cls == "simple") {
        forbid("members");
        if (!j.contains("density")) throw ConfigError("null: class simple needs a 'density'");
        return NullSpec::simple(distribution_from_json(j.at("density")));
    }
    if (cls == "finite") {
        forbid("density");
        if (!j.contains("members") || !j.at("members").is_array() || j.at("members").empty())
            throw ConfigError("null: class finite needs a nonempty 'members' array");
        std::vector<Distribution> members;
        for (const auto& m : j.at("members")) members.push_back(distribution_from_json(m));
        return NullSpec::finite(std::move(members));
    }
    throw ConfigError("null: unknown class '" + cls + "'");
}

namespace {

class GaussianNull final : public NullModel {
public:
    void check(double x) const override { require_finite(x); }
    void observe(double x) override {
        check(x);
        moments_.add(x);
    }
    NullFit fit() const override { return gaussian_fit_from_moments(moments_); }
    std::size_t size() const override { return moments_.n; }
    std::unique_ptr<NullModel> clone() const override { return std::make_unique<GaussianNull>(*this); }

private:
    RunningMoments moments_;
};

// Keeps the prefix sorted so each refit skips the sort.
class SortedPrefixNull : public NullModel {
public:
    std::size_t size() const override { return sorted_.size(); }
    void observe(double x) override {
        check(x);
        sorted_.insert(std::upper_bound(sorted_.begin(), sorted_.end(), x), x);
    }

protected:
    std::vector<double> sorted_;
};

class MonotoneNull final : public SortedPrefixNull {
public:
    void check(double x) const override { require_positive(x); }
    NullFit fit() const override {
        if (sorted_.empty()) throw DegenerateNull("monotone null needs at least one observation");
        return detail::grenander_presorted(sorted_);
    }
    std::unique_ptr<NullModel> clone() const override { return std::make_unique<MonotoneNull>(*this); }
};

class LogConcaveNull final : public SortedPrefixNull {
public:
    void check(double x) const override { require_finite(x); }
    NullFit fit() const override { return logconcave_loglik(sorted_); }
    std::unique_ptr<NullModel> clone() const override { return std::make_unique<LogConcaveNull>(*this); }
};

class FiniteNull final : public NullModel {
public:
    explicit FiniteNull(std::vector<Distribution> members)
        : members_(std::move(members)), sums_(members_.size(), 0.0) {}

    void check(double x) const override {
        for (const auto& d : members_)
            if (!std::isfinite(d.log_pdf(x)))
                throw UnsupportedObservation("observation " + std::to_string(x) + " outside the support of " +
                                             d.describe());
    }
    void observe(double x) override {
        check(x);
        for (std::size_t k = 0; k < members_.size(); ++k) sums_[k] += members_[k].log_pdf(x);
        ++n_;
    }
    NullFit fit() const override {
        const auto best = static_cast<std::size_t>(std::max_element(sums_.begin(), sums_.end()) - sums_.begin());
        if (members_.size() == 1) return NullFit{sums_[0], SimpleFit{members_[0].describe()}, n_};
        return NullFit{sums_[best], FiniteFit{best}, n_};
    }
    std::size_t size() const override { return n_; }
    std::unique_ptr<NullModel> clone() const override { return std::make_unique<FiniteNull>(*this); }

private:
    std::vector<Distribution> members_;
    std::vector<double> sums_;
    std::size_t n_ = 0;
};

} // namespace

std::unique_ptr<NullModel> make_null_model(const NullSpec& spec) {
    switch (spec.cls) {
    case NullClass::gaussian: return std::make_unique<GaussianNull>();
    case NullClass::monotone: return std::make_unique<MonotoneNull>();
    case NullClass::logconcave: return std::make_unique<LogConcaveNull>();
    case NullClass::simple:
        if (spec.members.size() != 1) throw ConfigError("simple null needs exactly one density");
        return std::make_unique<FiniteNull>(spec.members);
    case NullClass::finite:
        if (spec.members.empty()) throw ConfigError("finite null needs at least one member");
        return std::make_unique<FiniteNull>(spec.members);
    }
    throw ConfigError("unknown null class");
}

} // namespace preproc
