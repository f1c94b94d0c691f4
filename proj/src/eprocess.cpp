#include "preproc/eprocess.hpp"

#include "preproc/errors.hpp"
#include "preproc/numeric.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace preproc {

namespace {

constexpr int kRunCheckpointVersion = 1;

double threshold(double alpha) { return std::log(1.0 / alpha); }

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

} // namespace

double anytime_p(double log_e) {
    if (std::isnan(log_e)) return 1.0;
    return std::min(1.0, std::exp(-log_e));
}

bool test_at_level(const EProcessRecord& r, double alpha) {
    if (r.degenerate || std::isnan(r.log_e)) return false;
    return r.log_e >= threshold(alpha);
}

void RunSettings::validate() const {
    for (const auto& u : grid.nodes()) preproc::validate(family, u);
    for (double a : alphas)
        if (!(a > 0.0 && a < 1.0)) throw ConfigError("alpha values must lie in (0, 1)");
    if (null.cls == NullClass::simple && null.members.size() != 1)
        throw ConfigError("simple null needs exactly one density");
    if (null.cls == NullClass::finite && null.members.empty())
        throw ConfigError("finite null needs at least one member");
    if (policy == DenominatorPolicy::checkpoints && checkpoint_stride == 0)
        throw ConfigError("checkpoint-only denominators need a positive checkpoint stride");
}

json settings_to_json(const RunSettings& s) {
    return {{"family", std::string(to_string(s.family))},
            {"grid", grid_to_json(s.grid)},
            {"schedule", schedule_to_json(s.schedule)},
            {"null", null_spec_to_json(s.null)},
            {"checkpoint_stride", s.checkpoint_stride},
            {"alphas", s.alphas},
            {"denominator", s.policy == DenominatorPolicy::every_step ? "every_step" : "checkpoints"}};
}

RunSettings settings_from_json(const json& j) {
    constexpr std::string_view where = "run settings";
    expect_keys(j, {"family", "grid", "schedule", "null", "checkpoint_stride", "alphas", "denominator"}, where);
    RunSettings s;
    s.family = kernel_family_from_string(require<std::string>(j, "family", where));
    s.grid = grid_from_json(j.at("grid"));
    s.schedule = schedule_from_json(j.at("schedule"));
    s.null = null_spec_from_json(j.at("null"));
    s.checkpoint_stride = require<std::uint64_t>(j, "checkpoint_stride", where);
    s.alphas = require<std::vector<double>>(j, "alphas", where);
    const auto policy = require<std::string>(j, "denominator", where);
    if (policy == "every_step")
        s.policy = DenominatorPolicy::every_step;
    else if (policy == "checkpoints")
        s.policy = DenominatorPolicy::checkpoints;
    else
        throw ConfigError("denominator must be 'every_step' or 'checkpoints'");
    s.validate();
    return s;
}

EProcessRun::EProcessRun(RunSettings settings)
    : settings_((settings.validate(), std::move(settings))),
      pr_(settings_.family, settings_.grid, settings_.schedule), null_(make_null_model(settings_.null)),
      crossings_(settings_.alphas.size()), max_log_e_(-kInf) {
    records_.push_back(EProcessRecord{});
}

EProcessRun::EProcessRun(const EProcessRun& o)
    : settings_(o.settings_), pr_(o.pr_), null_(o.null_->clone()), prefix_(o.prefix_), records_(o.records_),
      crossings_(o.crossings_), max_log_e_(o.max_log_e_) {}

EProcessRun& EProcessRun::operator=(const EProcessRun& o) {
    if (this != &o) *this = EProcessRun(o);
    return *this;
}

EProcessRecord EProcessRun::step(double x) {
    if (!in_support(settings_.family, x))
        throw UnsupportedObservation("observation " + std::to_string(x) + " outside the " +
                                     std::string(to_string(settings_.family)) + " kernel support");
    null_->check(x);
    pr_.update(x);
    null_->observe(x);
    prefix_.push_back(x);

    EProcessRecord r;
    r.n = pr_.step();
    r.log_numerator = pr_.log_marginal();
    const bool at_checkpoint = settings_.checkpoint_stride > 0 && r.n % settings_.checkpoint_stride == 0;
    const bool evaluate = settings_.policy == DenominatorPolicy::every_step || at_checkpoint;
    if (!evaluate) {
        r.log_denominator = std::nan("");
        r.log_e = std::nan("");
        r.anytime_p = 1.0;
        return r;
    }
    try {
        r.log_denominator = null_->fit().log_lik_sup;
        r.log_e = r.log_numerator - r.log_denominator;
    } catch (const DegenerateNull&) {
        r.degenerate = true;
        r.log_denominator = kInf;
        r.log_e = -kInf;
    }
    r.anytime_p = anytime_p(r.log_e);
    if (!r.degenerate) max_log_e_ = std::max(max_log_e_, r.log_e);

    bool new_crossing = false;
    for (std::size_t k = 0; k < crossings_.size(); ++k) {
        if (!crossings_[k] && test_at_level(r, settings_.alphas[k])) {
            crossings_[k] = r.n;
            new_crossing = true;
        }
    }
    if (at_checkpoint || new_crossing) records_.push_back(r);
    return r;
}

json EProcessRun::checkpoint() const {
    json recs = json::array();
    for (const auto& r : records_)
        recs.push_back({{"n", r.n},
                        {"log_num", r.log_numerator},
                        {"log_den", nullable(r.log_denominator)},
                        {"log_e", nullable(r.log_e)},
                        {"anytime_p", r.anytime_p},
                        {"degenerate", r.degenerate}});
    json cross = json::array();
    for (const auto& c : crossings_) cross.push_back(c ? json(*c) : json(nullptr));
    return {{"format", "preproc.eprocess_run"},
            {"version", kRunCheckpointVersion},
            {"settings", settings_to_json(settings_)},
            {"pr_state", pr_.to_json()},
            {"prefix", prefix_},
            {"records", recs},
            {"crossings", cross},
            {"max_log_e", nullable(max_log_e_)}};
}

EProcessRun EProcessRun::resume(const json& j) {
    constexpr std::string_view where = "checkpoint";
    expect_keys(j, {"format", "version", "settings", "pr_state", "prefix", "records", "crossings", "max_log_e"},
                where);
    if (require<std::string>(j, "format", where) != "preproc.eprocess_run")
        throw ConfigError("checkpoint: unexpected format tag");
    if (require<int>(j, "version", where) != kRunCheckpointVersion)
        throw ConfigError("checkpoint: unsupported version");
    EProcessRun run(settings_from_json(j.at("settings")));
    PrState pr = PrState::from_json(j.at("pr_state"));
    if (pr.family() != run.settings_.family || !(pr.mixing().grid == run.settings_.grid) ||
        !(pr.schedule() == run.settings_.schedule))
        throw ConfigError("checkpoint: PR state does not match the run settings");
    run.pr_ = std::move(pr);
    run.prefix_ = require<std::vector<double>>(j, "prefix", where);
    if (run.prefix_.size() != run.pr_.step()) throw ConfigError("checkpoint: prefix length differs from PR step");
    for (double x : run.prefix_) run.null_->observe(x);

    run.records_.clear();
    for (const auto& r : j.at("records")) {
        EProcessRecord rec;
        rec.n = require<std::uint64_t>(r, "n", where);
        rec.log_numerator = require<double>(r, "log_num", where);
        rec.degenerate = require<bool>(r, "degenerate", where);
        rec.anytime_p = require<double>(r, "anytime_p", where);
        if (rec.degenerate) {
            rec.log_denominator = kInf;
            rec.log_e = -kInf;
        } else {
            rec.log_denominator = require<double>(r, "log_den", where);
            rec.log_e = require<double>(r, "log_e", where);
        }
        run.records_.push_back(rec);
    }
    const auto& cross = j.at("crossings");
    if (!cross.is_array() || cross.size() != run.crossings_.size())
        throw ConfigError("checkpoint: crossings do not match the alpha list");
    for (std::size_t k = 0; k < cross.size(); ++k)
        run.crossings_[k] = cross[k].is_null() ? std::nullopt : std::optional<std::uint64_t>(cross[k].get<std::uint64_t>());
    run.max_log_e_ = j.at("max_log_e").is_null() ? -kInf : j.at("max_log_e").get<double>();
    return run;
}

EProcessRun run_stream(const RunSettings& settings, std::span<const double> data) {
    EProcessRun run(settings);
    for (double x : data) run.step(x);
    return run;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

void write_records_csv_header(std::ostream& os) { os << "n,log_num,log_den,log_e,anytime_p,flag\n"; }

void write_record_row(std::ostream& os, const EProcessRecord& r) {
    os << r.n << ',' << format_double(r.log_numerator) << ',' << format_double(r.log_denominator) << ','
       << format_double(r.log_e) << ',' << format_double(r.anytime_p) << ','
       << (r.degenerate ? "degenerate_null" : "ok") << '\n';
}

void write_records_csv(std::ostream& os, std::span<const EProcessRecord> records) {
    write_records_csv_header(os);
    for (const auto& r : records) write_record_row(os, r);
}

} // namespace preproc
