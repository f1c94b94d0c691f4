#include "preproc/config.hpp"

#include "preproc/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>

namespace preproc {

Command command_from_string(std::string_view name) {
    if (name == "test") return Command::test;
    if (name == "simulate") return Command::simulate;
    if (name == "growth-rate") return Command::growth_rate;
    if (name == "confset") return Command::confset;
    throw ConfigError("unknown command '" + std::string(name) + "'");
}

std::string_view to_string(Command c) {
    switch (c) {
    case Command::test: return "test";
    case Command::simulate: return "simulate";
    case Command::growth_rate: return "growth-rate";
    case Command::confset: return "confset";
    }
    return "test";
}

FeatureGrid candidates_from_json(const json& j) {
    constexpr std::string_view where = "candidates";
    expect_keys(j, {"normal_means", "list"}, where);
    if (j.contains("normal_means") == j.contains("list"))
        throw ConfigError("candidates: give exactly one of 'normal_means' or 'list'");
    if (j.contains("normal_means")) {
        const json& g = j.at("normal_means");
        constexpr std::string_view w = "candidates.normal_means";
        expect_keys(g, {"lower", "upper", "count", "sd"}, w);
        const double sd = optional<double>(g, "sd", 1.0, w);
        if (!(sd > 0.0)) throw ConfigError("candidates.normal_means: sd must be positive");
        return FeatureGrid::normal_means(require<double>(g, "lower", w), require<double>(g, "upper", w),
                                         require<std::size_t>(g, "count", w), sd, 0.05);
    }
    const json& list = j.at("list");
    if (!list.is_array() || list.empty()) throw ConfigError("candidates.list must be a nonempty array");
    FeatureGrid g;
    for (const auto& c : list) {
        expect_keys(c, {"distribution", "feature"}, "candidates.list entry");
        if (!c.contains("distribution")) throw ConfigError("candidates.list entry: missing field 'distribution'");
        g.candidates.push_back(
            {distribution_from_json(c.at("distribution")), require<double>(c, "feature", "candidates.list entry")});
    }
    return g;
}

namespace {

CoverageSpec coverage_from_json(const json& j) {
    constexpr std::string_view where = "coverage";
    expect_keys(j, {"replications", "n", "truth", "feature"}, where);
    CoverageSpec c;
    c.replications = optional<std::size_t>(j, "replications", c.replications, where);
    c.n = optional<std::size_t>(j, "n", c.n, where);
    if (j.contains("truth")) c.truth = distribution_from_json(j.at("truth"));
    c.true_feature = optional<double>(j, "feature", c.true_feature, where);
    return c;
}

DenominatorPolicy policy_from_string(const std::string& p) {
    if (p == "every_step") return DenominatorPolicy::every_step;
    if (p == "checkpoints") return DenominatorPolicy::checkpoints;
    throw ConfigError("denominator must be 'every_step' or 'checkpoints'");
}

} // namespace

RunConfig config_from_json(const json& j, Command command) {
    constexpr std::string_view where = "config";
    expect_keys(j,
                {"command", "family", "grid", "schedule", "null", "alphas", "checkpoint_stride", "denominator", "input",
                 "output", "checkpoint", "resume", "summary", "generator", "replications", "max_n",
                 "burn_in_fraction", "seed", "workers", "theoretical_delta", "candidates", "coverage"},
                where);
    RunConfig c;
    c.command = command;
    if (j.contains("command") && command_from_string(require<std::string>(j, "command", where)) != command)
        throw ConfigError("config: 'command' is '" + j.at("command").get<std::string>() + "' but '" +
                          std::string(to_string(command)) + "' was requested");
    if (j.contains("family")) c.family = kernel_family_from_string(require<std::string>(j, "family", where));
    if (j.contains("grid")) c.grid = grid_from_json(j.at("grid"));
    if (j.contains("schedule")) c.schedule = schedule_from_json(j.at("schedule"));
    if (j.contains("null")) c.null = null_spec_from_json(j.at("null"));
    c.alphas = optional<std::vector<double>>(j, "alphas", c.alphas, where);
    if (j.contains("checkpoint_stride")) c.checkpoint_stride = require<std::uint64_t>(j, "checkpoint_stride", where);
    if (j.contains("denominator")) c.policy = policy_from_string(require<std::string>(j, "denominator", where));
    c.input = optional<std::string>(j, "input", c.input, where);
    if (j.contains("output")) c.output = require<std::string>(j, "output", where);
    if (j.contains("checkpoint")) c.checkpoint = require<std::string>(j, "checkpoint", where);
    if (j.contains("resume")) c.resume = require<std::string>(j, "resume", where);
    if (j.contains("summary")) c.summary = require<std::string>(j, "summary", where);
    if (j.contains("generator")) c.generator = distribution_from_json(j.at("generator"));
    c.replications = optional<std::size_t>(j, "replications", c.replications, where);
    c.max_n = optional<std::uint64_t>(j, "max_n", c.max_n, where);
    c.burn_in_fraction = optional<double>(j, "burn_in_fraction", c.burn_in_fraction, where);
    c.seed = optional<std::uint64_t>(j, "seed", c.seed, where);
    c.workers = optional<std::size_t>(j, "workers", c.workers, where);
    c.theoretical_delta = optional<bool>(j, "theoretical_delta", c.theoretical_delta, where);
    if (j.contains("candidates")) c.candidates = candidates_from_json(j.at("candidates"));
    if (j.contains("coverage")) c.coverage = coverage_from_json(j.at("coverage"));
    return c;
}

void apply_environment(RunConfig& config) {
    const char* env = std::getenv("PREPROC_WORKERS");
    if (!env || !*env) return;
    std::size_t w = 0;
    const auto [end, ec] = std::from_chars(env, env + std::strlen(env), w);
    if (ec != std::errc() || *end != '\0' || w < 1) throw ConfigError("PREPROC_WORKERS must be a positive integer");
    config.workers = w;
}

void RunConfig::validate() const {
    auto need = [&](bool present, const char* field) {
        if (!present)
            throw ConfigError(std::string(to_string(command)) + " needs '" + field + "' in the config");
    };
    if (workers < 1) throw ConfigError("workers must be at least 1");
    // Schedule exponents are checked when the schedule is built.
    switch (command) {
    case Command::test:
        need(family.has_value(), "family");
        need(grid.has_value(), "grid");
        need(null.has_value(), "null");
        if (!resume) run_settings().validate();
        break;
    case Command::simulate:
        need(generator.has_value(), "generator");
        need(family.has_value(), "family");
        need(grid.has_value(), "grid");
        need(null.has_value(), "null");
        scenario().validate();
        break;
    case Command::growth_rate:
        need(generator.has_value(), "generator");
        need(family.has_value(), "family");
        need(grid.has_value(), "grid");
        need(null.has_value(), "null");
        for (const auto& u : grid->nodes()) preproc::validate(*family, u);
        break;
    case Command::confset:
        need(family.has_value(), "family");
        need(grid.has_value(), "grid");
        need(candidates.has_value(), "candidates");
        if (alphas.size() != 1) throw ConfigError("confset takes exactly one alpha");
        feature_grid().validate();
        for (const auto& u : grid->nodes()) preproc::validate(*family, u);
        if (coverage && (coverage->replications < 1 || coverage->n < 1))
            throw ConfigError("coverage needs replications >= 1 and n >= 1");
        break;
    }
}

RunSettings RunConfig::run_settings() const {
    RunSettings s;
    s.family = family.value_or(KernelFamily::gaussian);
    s.grid = grid.value_or(IndexGrid::gaussian_default());
    s.schedule = schedule;
    s.null = null.value_or(NullSpec::gaussian());
    s.alphas = alphas;
    s.checkpoint_stride = checkpoint_stride.value_or(1);
    s.policy = policy.value_or(DenominatorPolicy::every_step);
    return s;
}

ScenarioSpec RunConfig::scenario() const {
    ScenarioSpec s;
    if (generator) s.generator = *generator;
    if (null) s.null = *null;
    if (family) s.family = *family;
    if (grid) s.grid = *grid;
    s.schedule = schedule;
    s.replications = replications;
    s.max_n = max_n;
    s.stride = checkpoint_stride.value_or(100);
    s.seed = seed;
    s.workers = workers;
    s.burn_in_fraction = burn_in_fraction;
    s.policy = policy;
    return s;
}

FeatureGrid RunConfig::feature_grid() const {
    FeatureGrid g = candidates.value_or(FeatureGrid{});
    g.alpha = alphas.empty() ? 0.05 : alphas.front();
    return g;
}

} // namespace preproc
