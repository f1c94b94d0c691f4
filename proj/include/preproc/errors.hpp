#pragma once

#include <stdexcept>
#include <string>

namespace preproc {

// Coarse classification used by the CLI to pick an exit status.
enum class ErrorKind { config, data, numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Observation outside the support of a kernel family, null class or density.
class UnsupportedObservation : public Error {
public:
    explicit UnsupportedObservation(const std::string& what) : Error(ErrorKind::data, what) {}
};

// The PR normalizer underflowed: every kernel density vanishes at the observation.
class NumericalDegeneracy : public Error {
public:
    explicit NumericalDegeneracy(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

// The null supremum diverges on the current prefix (e.g. zero sample variance).
class DegenerateNull : public Error {
public:
    explicit DegenerateNull(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

class SolverDidNotConverge : public Error {
public:
    SolverDidNotConverge(const std::string& what, double last_value, double gap)
        : Error(ErrorKind::numerical, what), last_value_(last_value), gap_(gap) {}
    double last_value() const noexcept { return last_value_; }
    double gap() const noexcept { return gap_; }

private:
    double last_value_;
    double gap_;
};

class AbsoluteContinuityViolation : public Error {
public:
    explicit AbsoluteContinuityViolation(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

class InsufficientCheckpoints : public Error {
public:
    explicit InsufficientCheckpoints(const std::string& what) : Error(ErrorKind::data, what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

// Malformed input stream; carries the 1-based line number.
class InputError : public Error {
public:
    InputError(std::size_t line, const std::string& what)
        : Error(ErrorKind::data, "line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace preproc
