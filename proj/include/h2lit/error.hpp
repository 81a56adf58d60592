#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

namespace h2lit {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input text or file that does not follow its format. `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
public:
    ParseError(std::string message, std::size_t line = 0)
        : Error(std::move(message)), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Configuration that violates a model invariant (bad shares, unknown component, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

class QueryError : public Error {
public:
    using Error::Error;
};

/// Thrown when an iterative solver hits its iteration cap; carries the last iterate.
class ConvergenceError : public Error {
public:
    ConvergenceError(std::string message, std::vector<double> last, double residual)
        : Error(std::move(message)), last_(std::move(last)), residual_(residual) {}

    const std::vector<double>& last_iterate() const noexcept { return last_; }
    double residual() const noexcept { return residual_; }

private:
    std::vector<double> last_;
    double residual_;
};

} // namespace h2lit
