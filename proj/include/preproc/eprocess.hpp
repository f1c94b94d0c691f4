#pragma once

#include "preproc/json_util.hpp"
#include "preproc/null_models.hpp"
#include "preproc/pr_engine.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace preproc {

struct EProcessRecord {
    std::uint64_t n = 0;
    double log_numerator = 0.0;   // log q_PR(x^n)
    double log_denominator = 0.0; // sup over the null of log p(x^n)
    double log_e = 0.0;
    double anytime_p = 1.0;
    bool degenerate = false;      // null sup diverged; the test abstains

    bool operator==(const EProcessRecord&) const = default;
};

// min(1, exp(-log_e)).
double anytime_p(double log_e);
inline double anytime_p(const EProcessRecord& r) { return anytime_p(r.log_e); }

// Reject iff E_n >= 1/alpha. Degenerate records never reject.
bool test_at_level(const EProcessRecord& r, double alpha);

enum class DenominatorPolicy {
    every_step,  // refit the null after every observation
    checkpoints, // refit only at checkpoint steps; crossings are detected there
};

struct RunSettings {
    KernelFamily family = KernelFamily::gaussian;
    IndexGrid grid = IndexGrid::gaussian_default();
    WeightSchedule schedule = WeightSchedule::power();
    NullSpec null = NullSpec::gaussian();
    std::uint64_t checkpoint_stride = 1; // 0 keeps only n = 0 and crossings
    std::vector<double> alphas = {0.05};
    DenominatorPolicy policy = DenominatorPolicy::every_step;

    // Throws ConfigError.
    void validate() const;
};

json settings_to_json(const RunSettings& s);
RunSettings settings_from_json(const json& j);

// One data stream: PR numerator, null denominator and the recorded trajectory.
class EProcessRun {
public:
    explicit EProcessRun(RunSettings settings);
    EProcessRun(const EProcessRun& other);
    EProcessRun& operator=(const EProcessRun& other);
    EProcessRun(EProcessRun&&) noexcept = default;
    EProcessRun& operator=(EProcessRun&&) noexcept = default;

    // Consumes one observation and returns its record, whether or not the
    // record is kept. When the denominator is not evaluated at this step the
    // returned record has NaN log_denominator and log_e.
    EProcessRecord step(double x);

    const RunSettings& settings() const { return settings_; }
    const PrState& pr() const { return pr_; }
    std::uint64_t n() const { return pr_.step(); }
    const std::vector<double>& prefix() const { return prefix_; }
    const std::vector<EProcessRecord>& records() const { return records_; }
    // First n with log E_n >= log(1/alpha), per monitored alpha.
    const std::vector<std::optional<std::uint64_t>>& crossings() const { return crossings_; }
    // Largest log E_n over evaluated steps n >= 1 (-inf before any).
    double max_log_e() const { return max_log_e_; }
    const NullModel& null_model() const { return *null_; }

    json checkpoint() const;
    static EProcessRun resume(const json& checkpoint);

private:
    RunSettings settings_;
    PrState pr_;
    std::unique_ptr<NullModel> null_;
    std::vector<double> prefix_;
    std::vector<EProcessRecord> records_;
    std::vector<std::optional<std::uint64_t>> crossings_;
    double max_log_e_;
};

EProcessRun run_stream(const RunSettings& settings, std::span<const double> data);

// Header n,log_num,log_den,log_e,anytime_p,flag; 17 significant digits.
void write_records_csv(std::ostream& os, std::span<const EProcessRecord> records);
void write_records_csv_header(std::ostream& os);
void write_record_row(std::ostream& os, const EProcessRecord& r);
std::string format_double(double v);

} // namespace preproc
