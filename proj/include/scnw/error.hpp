#pragma once

#include <stdexcept>
#include <string>

namespace scnw {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parameter set or argument outside the admissible domain.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Scenario text rejected by the parser; carries the 1-based line number.
class ScenarioError : public Error {
public:
    ScenarioError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Integration failed (step-size precondition, non-finite state).
class SimulationError : public Error {
public:
    using Error::Error;
};

/// Trace does not support the requested analysis.
class AnalysisError : public Error {
public:
    using Error::Error;
};

}  // namespace scnw
