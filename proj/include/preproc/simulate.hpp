#pragma once

#include "preproc/distributions.hpp"
#include "preproc/eprocess.hpp"
#include "preproc/json_util.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace preproc {

struct ScenarioSpec {
    Distribution generator = Distribution::gamma(2.0, 1.0);
    NullSpec null = NullSpec::monotone();
    KernelFamily family = KernelFamily::gamma;
    IndexGrid grid = IndexGrid::gamma_default();
    WeightSchedule schedule = WeightSchedule::power();
    std::size_t replications = 20;
    std::uint64_t max_n = 2000;
    std::uint64_t stride = 100;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    double burn_in_fraction = 0.2;
    // Unset: every step for nulls with O(1) refits (gaussian, simple,
    // finite), checkpoint steps only for monotone and log-concave.
    std::optional<DenominatorPolicy> policy;

    // Throws ConfigError.
    void validate() const;
    DenominatorPolicy effective_policy() const;
    RunSettings run_settings() const;
    std::uint64_t burn_in() const;
};

json scenario_to_json(const ScenarioSpec& s);
// Keys: generator, null, family, grid, schedule, replications, max_n,
// stride, seed, workers, burn_in_fraction, denominator. Only generator is
// required; the rest default as in ScenarioSpec.
ScenarioSpec scenario_from_json(const json& j);

// n iid Gamma(shape, 1) draws from stream 0 of the seed.
std::vector<double> gen_gamma(double shape, std::size_t n, std::uint64_t seed);
// n iid draws from 3/4 N(0, 2) + 1/4 N(mu, 2) (variances), stream 0.
std::vector<double> gen_normal_mixture(double mu, std::size_t n, std::uint64_t seed);

struct Checkpoint {
    std::uint64_t n = 0;
    double log_e = 0.0;
};

struct ReplicationResult {
    std::size_t rep = 0;
    std::vector<Checkpoint> checkpoints; // n = 0, stride, 2 stride, ...
    double max_log_e = 0.0;              // over every evaluated step n >= 1
    double terminal_log_e = 0.0;
    std::optional<std::string> failure;
};

struct SimulationTable {
    std::vector<ReplicationResult> reps;

    std::size_t failures() const;
};

// Replication r draws max_n observations from stream r of the seed and runs
// one e-process over them. A failing replication is recorded and the rest
// continue. Results are ordered by replication index.
SimulationTable run_replications(const ScenarioSpec& spec);

// Header rep,n,log_e.
void write_table_csv(std::ostream& os, const SimulationTable& table);

struct SlopeEstimate {
    std::vector<double> per_rep; // NaN for failed replications
    double mean = 0.0;
    double sd = 0.0;             // across replications, n - 1 denominator
    std::uint64_t n_min = 0;
};

// Least-squares slope of y on n.
double least_squares_slope(const std::vector<Checkpoint>& points);

// Per replication, the slope of log_e on n over checkpoints with n >= n_min
// and finite log_e. Throws InsufficientCheckpoints when a successful
// replication has fewer than 3 such checkpoints or none succeeded.
SlopeEstimate estimate_slope(const SimulationTable& table, std::uint64_t n_min);

json summary_json(const ScenarioSpec& spec, const SimulationTable& table, const SlopeEstimate& slope,
                  std::optional<double> theoretical_delta);

} // namespace preproc
