#pragma once

#include "preproc/confidence.hpp"
#include "preproc/eprocess.hpp"
#include "preproc/json_util.hpp"
#include "preproc/simulate.hpp"

#include <optional>
#include <string>

namespace preproc {

enum class Command { test, simulate, growth_rate, confset };

Command command_from_string(std::string_view name);
std::string_view to_string(Command c);

struct CoverageSpec {
    std::size_t replications = 200;
    std::size_t n = 500;
    Distribution truth = Distribution::normal(0.0, 1.0);
    double true_feature = 0.0;
};

// Everything one CLI invocation needs. Parsed from a JSON file, then
// overridden by flags, then validated for the command.
struct RunConfig {
    Command command = Command::test;

    std::optional<KernelFamily> family;
    std::optional<IndexGrid> grid;
    WeightSchedule schedule = WeightSchedule::power();
    std::optional<NullSpec> null;
    std::vector<double> alphas = {0.05};
    std::optional<std::uint64_t> checkpoint_stride; // test: 1, simulate: 100
    std::optional<DenominatorPolicy> policy;

    std::string input = "-";
    std::optional<std::string> output;
    std::optional<std::string> checkpoint;
    std::optional<std::string> resume;
    std::optional<std::string> summary;

    std::optional<Distribution> generator;
    std::size_t replications = 20;
    std::uint64_t max_n = 2000;
    double burn_in_fraction = 0.2;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    bool theoretical_delta = true;

    std::optional<FeatureGrid> candidates;
    std::optional<CoverageSpec> coverage;

    // Throws ConfigError when a field the command needs is missing or invalid.
    void validate() const;

    RunSettings run_settings() const;
    ScenarioSpec scenario() const;
    FeatureGrid feature_grid() const; // candidates with alpha = alphas.front()
};

// Keys: command, family, grid, schedule, null, alphas, checkpoint_stride,
// denominator, input, output, checkpoint, resume, summary, generator,
// replications, max_n, burn_in_fraction, seed, workers, theoretical_delta,
// candidates, coverage. Unknown keys are rejected. A "command" key must
// agree with the command being run.
RunConfig config_from_json(const json& j, Command command);

// {"normal_means": {lower, upper, count, sd}} | {"list": [{distribution, feature}]}
FeatureGrid candidates_from_json(const json& j);

// Applies PREPROC_WORKERS when set.
void apply_environment(RunConfig& config);

} // namespace preproc
