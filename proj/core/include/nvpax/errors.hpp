#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace nvpax {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A topology failed structural validation, or a lookup referenced an unknown id.
class TopologyError : public Error {
public:
    using Error::Error;
};

/// The constraint system admits no allocation. Carries the phase (1-3) and,
/// for phase 1, the priority level whose program was infeasible.
class InfeasibleError : public Error {
public:
    InfeasibleError(std::string what, int phase, int priority_level = 0)
        : Error(std::move(what)), phase_(phase), priority_level_(priority_level) {}

    int phase() const noexcept { return phase_; }
    int priority_level() const noexcept { return priority_level_; }

private:
    int phase_;
    int priority_level_;
};

/// The numerical solver broke down on a problem that is not known to be infeasible.
class SolverError : public Error {
public:
    SolverError(std::string what, int phase)
        : Error(std::move(what)), phase_(phase) {}

    int phase() const noexcept { return phase_; }

private:
    int phase_;
};

/// Malformed trace or results file.
class TraceError : public Error {
public:
    TraceError(std::string what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace nvpax
