#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mfptrl {

/// Model data violates a structural invariant (row sums, index ranges, ...).
class InvalidModel : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An iterative solver hit its sweep cap before reaching the tolerance.
class BudgetExhausted : public std::runtime_error {
public:
    BudgetExhausted(const std::string& what, long sweeps, double delta)
        : std::runtime_error(what), sweeps_(sweeps), delta_(delta) {}

    long sweeps() const noexcept { return sweeps_; }
    double delta() const noexcept { return delta_; }

private:
    long sweeps_;
    double delta_;
};

class LengthMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ShapeMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class IoFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Syntax error in map or config text. Line and column are 1-based.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t line, std::size_t column)
        : std::runtime_error("line " + std::to_string(line) + ", column " +
                             std::to_string(column) + ": " + msg),
          line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// Well-formed input that breaks a semantic invariant.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Experiments passed to compare() do not share a map or seed list.
class ConfigMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace mfptrl
