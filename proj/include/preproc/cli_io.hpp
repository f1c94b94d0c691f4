#pragma once

#include "preproc/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace preproc {

enum ExitCode : int { kExitOk = 0, kExitOther = 1, kExitConfig = 2, kExitData = 3, kExitNumerical = 4 };

// Parses newline-delimited decimal observations. Every line must hold one
// finite number (surrounding whitespace allowed); anything else throws
// InputError naming the 1-based line. Calls sink(x) per observation.
template <class Sink>
void read_observations(std::istream& in, Sink&& sink);

double parse_observation(std::string_view line, std::size_t line_number);
std::vector<double> read_all_observations(std::istream& in);

// Each command reads `in` when config.input is "-" and writes to `out`
// unless an output path is configured. Summaries go to `err`.
int cmd_test(const RunConfig& config, std::istream& in, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_growth_rate(const RunConfig& config, std::ostream& out);
int cmd_confset(const RunConfig& config, std::istream& in, std::ostream& out, std::ostream& err);

// Full command line (args[0] is the program name). Returns the exit code;
// errors are reported on err.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

} // namespace preproc

#include <istream>
#include <string>

namespace preproc {

template <class Sink>
void read_observations(std::istream& in, Sink&& sink) {
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        sink(parse_observation(line, number));
    }
    if (in.bad()) throw InputError(number + 1, "read failure");
}

} // namespace preproc
