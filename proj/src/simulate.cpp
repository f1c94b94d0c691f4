#include "preproc/simulate.hpp"

#include "preproc/errors.hpp"
#include "preproc/numeric.hpp"
#include "preproc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace preproc {

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::pair<double, double> mean_sd(const std::vector<double>& v) {
    if (v.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    RunningMoments m;
    for (double x : v) m.add(x);
    const double sd = v.size() > 1 ? std::sqrt(m.m2 / static_cast<double>(v.size() - 1)) : 0.0;
    return {m.mean, sd};
}

} // namespace

void ScenarioSpec::validate() const {
    if (replications < 1) throw ConfigError("replications must be at least 1");
    if (stride < 1) throw ConfigError("checkpoint stride must be at least 1");
    if (max_n < stride) throw ConfigError("max_n must be at least the checkpoint stride");
    if (workers < 1) throw ConfigError("workers must be at least 1");
    if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) throw ConfigError("burn_in_fraction must lie in [0, 1)");
    run_settings().validate();
}

DenominatorPolicy ScenarioSpec::effective_policy() const {
    if (policy) return *policy;
    return null.cls == NullClass::monotone || null.cls == NullClass::logconcave ? DenominatorPolicy::checkpoints
                                                                                 : DenominatorPolicy::every_step;
}

RunSettings ScenarioSpec::run_settings() const {
    RunSettings s;
    s.family = family;
    s.grid = grid;
    s.schedule = schedule;
    s.null = null;
    s.checkpoint_stride = stride;
    s.alphas = {0.05};
    s.policy = effective_policy();
    return s;
}

std::uint64_t ScenarioSpec::burn_in() const {
    return static_cast<std::uint64_t>(std::floor(burn_in_fraction * static_cast<double>(max_n)));
}

json scenario_to_json(const ScenarioSpec& s) {
    json j = {{"generator", distribution_to_json(s.generator)},
              {"null", null_spec_to_json(s.null)},
              {"family", std::string(to_string(s.family))},
              {"grid", grid_to_json(s.grid)},
              {"schedule", schedule_to_json(s.schedule)},
              {"replications", s.replications},
              {"max_n", s.max_n},
              {"stride", s.stride},
              {"seed", s.seed},
              {"workers", s.workers},
              {"burn_in_fraction", s.burn_in_fraction}};
    if (s.policy) j["denominator"] = *s.policy == DenominatorPolicy::every_step ? "every_step" : "checkpoints";
    return j;
}

ScenarioSpec scenario_from_json(const json& j) {
    constexpr std::string_view where = "scenario";
    expect_keys(j,
                {"generator", "null", "family", "grid", "schedule", "replications", "max_n", "stride", "seed",
                 "workers", "burn_in_fraction", "denominator"},
                where);
    if (!j.contains("generator")) throw ConfigError("scenario: missing field 'generator'");
    ScenarioSpec s;
    s.generator = distribution_from_json(j.at("generator"));
    if (j.contains("family")) {
        s.family = kernel_family_from_string(require<std::string>(j, "family", where));
        if (!j.contains("grid"))
            s.grid = s.family == KernelFamily::gamma ? IndexGrid::gamma_default() : IndexGrid::gaussian_default();
    }
    if (j.contains("grid")) s.grid = grid_from_json(j.at("grid"));
    if (j.contains("null")) s.null = null_spec_from_json(j.at("null"));
    if (j.contains("schedule")) s.schedule = schedule_from_json(j.at("schedule"));
    s.replications = optional<std::size_t>(j, "replications", s.replications, where);
    s.max_n = optional<std::uint64_t>(j, "max_n", s.max_n, where);
    s.stride = optional<std::uint64_t>(j, "stride", s.stride, where);
    s.seed = optional<std::uint64_t>(j, "seed", s.seed, where);
    s.workers = optional<std::size_t>(j, "workers", s.workers, where);
    s.burn_in_fraction = optional<double>(j, "burn_in_fraction", s.burn_in_fraction, where);
    if (j.contains("denominator")) {
        const auto p = require<std::string>(j, "denominator", where);
        if (p == "every_step")
            s.policy = DenominatorPolicy::every_step;
        else if (p == "checkpoints")
            s.policy = DenominatorPolicy::checkpoints;
        else
            throw ConfigError("denominator must be 'every_step' or 'checkpoints'");
    }
    s.validate();
    return s;
}

std::vector<double> gen_gamma(double shape, std::size_t n, std::uint64_t seed) {
    if (!(shape > 0.0) || !std::isfinite(shape)) throw ConfigError("gamma shape must be positive");
    Rng rng(seed, 0);
    return sample_n(Distribution::gamma(shape, 1.0), n, rng);
}

std::vector<double> gen_normal_mixture(double mu, std::size_t n, std::uint64_t seed) {
    Rng rng(seed, 0);
    return sample_n(Distribution::bimodal_normal(mu), n, rng);
}

std::size_t SimulationTable::failures() const {
    return static_cast<std::size_t>(std::count_if(reps.begin(), reps.end(), [](const auto& r) { return r.failure.has_value(); }));
}

SimulationTable run_replications(const ScenarioSpec& spec) {
    spec.validate();
    const RunSettings settings = spec.run_settings();
    SimulationTable table;
    table.reps.resize(spec.replications);
    parallel_for(spec.replications, spec.workers, [&](std::size_t r) {
        ReplicationResult& out = table.reps[r];
        out.rep = r;
        try {
            Rng rng(spec.seed, r);
            EProcessRun run(settings);
            for (std::uint64_t i = 0; i < spec.max_n; ++i) run.step(spec.generator.sample(rng));
            for (const auto& rec : run.records())
                if (rec.n % spec.stride == 0) out.checkpoints.push_back({rec.n, rec.log_e});
            out.max_log_e = run.max_log_e();
            out.terminal_log_e = run.records().back().log_e;
        } catch (const std::exception& e) {
            out.checkpoints.clear();
            out.failure = e.what();
        }
    });
    return table;
}

void write_table_csv(std::ostream& os, const SimulationTable& table) {
    os << "rep,n,log_e\n";
    for (const auto& r : table.reps)
        for (const auto& c : r.checkpoints) os << r.rep << ',' << c.n << ',' << format_double(c.log_e) << '\n';
}

double least_squares_slope(const std::vector<Checkpoint>& points) {
    if (points.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    double mn = 0.0, my = 0.0;
    for (const auto& p : points) {
        mn += static_cast<double>(p.n);
        my += p.log_e;
    }
    mn /= static_cast<double>(points.size());
    my /= static_cast<double>(points.size());
    double sxy = 0.0, sxx = 0.0;
    for (const auto& p : points) {
        const double dn = static_cast<double>(p.n) - mn;
        sxy += dn * (p.log_e - my);
        sxx += dn * dn;
    }
    return sxy / sxx;
}

SlopeEstimate estimate_slope(const SimulationTable& table, std::uint64_t n_min) {
    SlopeEstimate est;
    est.n_min = n_min;
    std::vector<double> ok;
    for (const auto& r : table.reps) {
        if (r.failure) {
            est.per_rep.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        std::vector<Checkpoint> pts;
        for (const auto& c : r.checkpoints)
            if (c.n >= n_min && std::isfinite(c.log_e)) pts.push_back(c);
        if (pts.size() < 3)
            throw InsufficientCheckpoints("replication " + std::to_string(r.rep) + " has " +
                                          std::to_string(pts.size()) + " usable checkpoints with n >= " +
                                          std::to_string(n_min) + "; at least 3 are needed");
        est.per_rep.push_back(least_squares_slope(pts));
        ok.push_back(est.per_rep.back());
    }
    if (ok.empty()) throw InsufficientCheckpoints("no successful replication to fit");
    std::tie(est.mean, est.sd) = mean_sd(ok);
    return est;
}

json summary_json(const ScenarioSpec& spec, const SimulationTable& table, const SlopeEstimate& slope,
                  std::optional<double> theoretical_delta) {
    std::vector<double> terminal, maxima;
    json failures = json::array();
    for (const auto& r : table.reps) {
        if (r.failure) {
            failures.push_back({{"rep", r.rep}, {"error", *r.failure}});
            continue;
        }
        terminal.push_back(r.terminal_log_e);
        maxima.push_back(r.max_log_e);
    }
    const auto [tm, tsd] = mean_sd(terminal);
    json slopes = json::array();
    for (double s : slope.per_rep) slopes.push_back(nullable(s));
    return {{"scenario", scenario_to_json(spec)},
            {"rng", std::string(Rng::kName)},
            {"n_min", slope.n_min},
            {"mean_slope", nullable(slope.mean)},
            {"sd_slope", nullable(slope.sd)},
            {"slopes", slopes},
            {"theoretical_delta", theoretical_delta ? nullable(*theoretical_delta) : json(nullptr)},
            {"terminal_log_e", {{"mean", nullable(tm)}, {"sd", nullable(tsd)}, {"median", nullable(median(terminal))}}},
            {"median_max_log_e", nullable(median(maxima))},
            {"failures", failures}};
}

} // namespace preproc
