// errors.hpp — exception taxonomy shared by the whole library.
//
// The CLI maps these onto process exit codes (validation 2, numeric 3, io 4),
// so library code should throw the most specific type that applies.
#pragma once

#include <stdexcept>
#include <string>

namespace sardr {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad argument values, malformed domain objects, parse failures.
struct ValidationError : Error {
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

struct ParseError : ValidationError {
    explicit ParseError(const std::string& msg) : ValidationError(msg) {}
};

// Mesh connectivity problems (boundary edge, non-manifold edge, isolated vertex).
struct TopologyError : ValidationError {
    explicit TopologyError(const std::string& msg) : ValidationError(msg) {}
};

// Tensor/image dimension mismatches.
struct ShapeError : ValidationError {
    explicit ShapeError(const std::string& msg) : ValidationError(msg) {}
};

// An API precondition was violated (caller bug rather than bad data).
struct ContractError : ValidationError {
    explicit ContractError(const std::string& msg) : ValidationError(msg) {}
};

// NaN/Inf or other numeric breakdown at runtime.
struct NumericError : Error {
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace sardr
