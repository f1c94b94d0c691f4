#include "preproc/cli_io.hpp"

#include "preproc/errors.hpp"
#include "preproc/kl_growth.hpp"
#include "preproc/parallel.hpp"

#include "CLI11.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>

namespace preproc {

double parse_observation(std::string_view line, std::size_t line_number) {
    auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
    while (!line.empty() && is_space(line.front())) line.remove_prefix(1);
    while (!line.empty() && is_space(line.back())) line.remove_suffix(1);
    if (line.empty()) throw InputError(line_number, "empty line");
    std::string_view body = line;
    if (body.front() == '+') body.remove_prefix(1);
    double x = 0.0;
    const auto [end, ec] = std::from_chars(body.data(), body.data() + body.size(), x);
    if (ec != std::errc() || end != body.data() + body.size())
        throw InputError(line_number, "not a decimal number: '" + std::string(line) + "'");
    if (!std::isfinite(x)) throw InputError(line_number, "observation must be finite");
    return x;
}

std::vector<double> read_all_observations(std::istream& in) {
    std::vector<double> xs;
    read_observations(in, [&](double x) { xs.push_back(x); });
    return xs;
}

namespace {

json read_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open '" + path + "'");
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot write '" + path + "'");
    f << content;
    if (!f) throw ConfigError("write to '" + path + "' failed");
}

// Opens config.input or falls back to `in`.
class InputSource {
public:
    InputSource(const std::string& path, std::istream& fallback) : stream_(&fallback) {
        if (path != "-") {
            file_ = std::make_unique<std::ifstream>(path);
            if (!*file_) throw ConfigError("cannot open input '" + path + "'");
            stream_ = file_.get();
        }
    }
    std::istream& get() { return *stream_; }

private:
    std::unique_ptr<std::ifstream> file_;
    std::istream* stream_;
};

class OutputSink {
public:
    OutputSink(const std::optional<std::string>& path, std::ostream& fallback) : stream_(&fallback) {
        if (path) {
            file_ = std::make_unique<std::ofstream>(*path, std::ios::binary | std::ios::trunc);
            if (!*file_) throw ConfigError("cannot write '" + *path + "'");
            stream_ = file_.get();
        }
    }
    std::ostream& get() { return *stream_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* stream_;
};

std::string alpha_text(double a) { return format_double(a); }

} // namespace

int cmd_test(const RunConfig& config, std::istream& in, std::ostream& out, std::ostream& err) {
    config.validate();
    EProcessRun run = config.resume ? EProcessRun::resume(read_json_file(*config.resume))
                                    : EProcessRun(config.run_settings());
    InputSource source(config.input, in);
    OutputSink sink(config.output, out);
    std::ostream& os = sink.get();

    std::size_t written = 0;
    auto write_rows = [&] {
        const auto& recs = run.records();
        for (; written < recs.size(); ++written) write_record_row(os, recs[written]);
    };
    write_records_csv_header(os);
    write_rows();
    try {
        read_observations(source.get(), [&](double x) {
            run.step(x);
            write_rows();
        });
    } catch (...) {
        os.flush();
        if (config.checkpoint) write_file(*config.checkpoint, run.checkpoint().dump() + "\n");
        throw;
    }
    os.flush();
    if (config.checkpoint) write_file(*config.checkpoint, run.checkpoint().dump() + "\n");
    const auto& alphas = run.settings().alphas;
    for (std::size_t k = 0; k < alphas.size(); ++k) {
        err << "crossing alpha=" << alpha_text(alphas[k]) << " n=";
        if (run.crossings()[k])
            err << *run.crossings()[k];
        else
            err << "none";
        err << '\n';
    }
    return kExitOk;
}

int cmd_growth_rate(const RunConfig& config, std::ostream& out) {
    config.validate();
    const GrowthRateReport r = growth_rate(*config.generator, *config.null, *config.family, *config.grid);
    OutputSink sink(config.output, out);
    json j = to_json(r);
    j["generator"] = distribution_to_json(*config.generator);
    j["null"] = null_spec_to_json(*config.null);
    j["family"] = std::string(to_string(*config.family));
    sink.get() << j.dump(2) << '\n';
    return kExitOk;
}

int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err) {
    config.validate();
    const ScenarioSpec spec = config.scenario();
    const SimulationTable table = run_replications(spec);
    {
        OutputSink sink(config.output, out);
        write_table_csv(sink.get(), table);
    }
    std::optional<double> delta;
    json delta_error;
    if (config.theoretical_delta) {
        try {
            delta = growth_rate(spec.generator, spec.null, spec.family, spec.grid).delta;
        } catch (const Error& e) {
            delta_error = e.what();
        }
    }
    SlopeEstimate slope;
    json slope_error;
    try {
        slope = estimate_slope(table, spec.burn_in());
    } catch (const InsufficientCheckpoints& e) {
        slope.mean = slope.sd = std::numeric_limits<double>::quiet_NaN();
        slope.n_min = spec.burn_in();
        slope_error = e.what();
    }
    json summary = summary_json(spec, table, slope, delta);
    if (!delta_error.is_null()) summary["theoretical_delta_error"] = delta_error;
    if (!slope_error.is_null()) summary["slope_error"] = slope_error;
    const std::string text = summary.dump(2) + "\n";
    if (config.summary)
        write_file(*config.summary, text);
    else
        err << text;
    return kExitOk;
}

int cmd_confset(const RunConfig& config, std::istream& in, std::ostream& out, std::ostream& err) {
    config.validate();
    const FeatureGrid grid = config.feature_grid();
    const PrConfig pr{*config.family, *config.grid, config.schedule};
    OutputSink sink(config.output, out);
    std::ostream& os = sink.get();
    if (!config.coverage) {
        InputSource source(config.input, in);
        const std::vector<double> data = read_all_observations(source.get());
        const ConfidenceSet set = confidence_set(data, grid, pr, config.workers);
        os << "feature,log_e,anytime_p\n";
        for (std::size_t i = 0; i < set.retained.size(); ++i) {
            const std::size_t k = set.retained[i];
            os << format_double(grid.candidates[k].feature) << ',' << format_double(set.log_e[k]) << ','
               << format_double(anytime_p(set.log_e[k])) << '\n';
        }
        if (set.hull)
            err << "hull lower=" << format_double(set.hull->first) << " upper=" << format_double(set.hull->second)
                << " retained=" << set.retained.size() << '/' << grid.candidates.size() << '\n';
        else
            err << "hull empty retained=0/" << grid.candidates.size() << '\n';
        return kExitOk;
    }
    const CoverageSpec& cov = *config.coverage;
    struct Row {
        bool covered = false;
        std::size_t retained = 0;
        std::optional<std::pair<double, double>> hull;
    };
    std::vector<Row> rows(cov.replications);
    parallel_for(cov.replications, config.workers, [&](std::size_t r) {
        Rng rng(config.seed, r);
        const std::vector<double> data = sample_n(cov.truth, cov.n, rng);
        const ConfidenceSet set = confidence_set(data, grid, pr, 1);
        rows[r].retained = set.retained.size();
        rows[r].hull = set.hull;
        for (double f : set.features)
            if (std::abs(f - cov.true_feature) <= 1e-12) rows[r].covered = true;
    });
    os << "rep,covered,retained,hull_lower,hull_upper\n";
    std::size_t covered = 0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        covered += rows[r].covered;
        os << r << ',' << (rows[r].covered ? 1 : 0) << ',' << rows[r].retained << ',';
        if (rows[r].hull)
            os << format_double(rows[r].hull->first) << ',' << format_double(rows[r].hull->second);
        else
            os << ',';
        os << '\n';
    }
    err << "coverage=" << format_double(static_cast<double>(covered) / static_cast<double>(rows.size())) << " ("
        << covered << '/' << rows.size() << ")\n";
    return kExitOk;
}

namespace {

struct Flags {
    std::string config_path;
    std::optional<std::string> input, output, checkpoint, resume, summary;
    std::vector<double> alphas;
    std::optional<std::uint64_t> stride, seed, max_n;
    std::optional<std::size_t> replications, workers;
    bool full_scale = false;
    bool no_delta = false;
    std::optional<std::size_t> coverage_reps;
};

void apply_flags(RunConfig& c, const Flags& f) {
    if (f.full_scale) {
        c.replications = 100;
        c.max_n = 5000;
        c.checkpoint_stride = 100;
    }
    if (f.input) c.input = *f.input;
    if (f.output) c.output = f.output;
    if (f.checkpoint) c.checkpoint = f.checkpoint;
    if (f.resume) c.resume = f.resume;
    if (f.summary) c.summary = f.summary;
    if (!f.alphas.empty()) c.alphas = f.alphas;
    if (f.stride) c.checkpoint_stride = f.stride;
    if (f.seed) c.seed = *f.seed;
    if (f.max_n) c.max_n = *f.max_n;
    if (f.replications) c.replications = *f.replications;
    if (f.workers) c.workers = *f.workers;
    if (f.no_delta) c.theoretical_delta = false;
    if (f.coverage_reps) {
        if (!c.coverage) c.coverage = CoverageSpec{};
        c.coverage->replications = *f.coverage_reps;
    }
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::config: return kExitConfig;
    case ErrorKind::data: return kExitData;
    case ErrorKind::numerical: return kExitNumerical;
    }
    return kExitOther;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sequential testing with predictive-recursion e-processes"};
    app.require_subcommand(1);
    Flags flags;
    auto common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", flags.config_path, "JSON config file")->required();
        sub->add_option("-o,--output", flags.output, "output path (default stdout)");
    };
    auto* test = app.add_subcommand("test", "run one e-process over a stream of observations");
    common(test);
    test->add_option("-i,--input", flags.input, "observation file, '-' for stdin");
    test->add_option("--checkpoint", flags.checkpoint, "write a checkpoint here at end of stream");
    test->add_option("--resume", flags.resume, "continue from this checkpoint");
    test->add_option("--alpha", flags.alphas, "levels to monitor (repeatable)");
    test->add_option("--stride", flags.stride, "record every k-th step");

    auto* sim = app.add_subcommand("simulate", "replicate a scenario and fit growth slopes");
    common(sim);
    sim->add_option("--summary", flags.summary, "summary JSON path (default stderr)");
    sim->add_option("--reps", flags.replications, "replications");
    sim->add_option("--max-n", flags.max_n, "observations per replication");
    sim->add_option("--stride", flags.stride, "checkpoint stride");
    sim->add_option("--seed", flags.seed, "base seed");
    sim->add_option("--workers", flags.workers, "worker threads");
    sim->add_flag("--full-scale", flags.full_scale, "100 replications of 5000 observations");
    sim->add_flag("--no-delta", flags.no_delta, "skip the theoretical growth rate");

    auto* growth = app.add_subcommand("growth-rate", "compute the theoretical growth rate");
    common(growth);

    auto* conf = app.add_subcommand("confset", "anytime-valid confidence set over a candidate grid");
    common(conf);
    conf->add_option("-i,--input", flags.input, "observation file, '-' for stdin");
    conf->add_option("--alpha", flags.alphas, "level");
    conf->add_option("--seed", flags.seed, "seed for coverage mode");
    conf->add_option("--workers", flags.workers, "worker threads");
    conf->add_option("--coverage-reps", flags.coverage_reps, "run a coverage experiment with this many replications");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
    }

    try {
        Command command = Command::test;
        if (*sim) command = Command::simulate;
        else if (*growth) command = Command::growth_rate;
        else if (*conf) command = Command::confset;
        RunConfig config = config_from_json(read_json_file(flags.config_path), command);
        apply_environment(config);
        apply_flags(config, flags);
        switch (command) {
        case Command::test: return cmd_test(config, in, out, err);
        case Command::simulate: return cmd_simulate(config, out, err);
        case Command::growth_rate: return cmd_growth_rate(config, out);
        case Command::confset: return cmd_confset(config, in, out, err);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitOther;
    }
    return kExitOther;
}

} // namespace preproc
