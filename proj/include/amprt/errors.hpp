#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace amprt {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (non-finite input, eta <= 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Invalid experiment or numerical configuration (bad params, quadrature order too small, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Vector/matrix dimensions do not agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Root finder was given a bracket without a sign change.
class BracketError : public Error {
public:
    using Error::Error;
};

// Model vector with zero norm where a direction is required.
class DegenerateModelError : public Error {
public:
    using Error::Error;
};

// EM input without spread (all logits identical, too few points).
class DegenerateFitError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

// Non-finite iterate in an AMP run. Carries the iteration at which it appeared.
class DivergenceError : public NumericalError {
public:
    DivergenceError(const std::string& what, int iteration)
        : NumericalError(what + " (iteration " + std::to_string(iteration) + ")"),
          iteration_(iteration) {}

    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Malformed input file. line() is 1-based; 0 when unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace amprt
