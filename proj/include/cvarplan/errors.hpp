#pragma once

#include <stdexcept>
#include <string>

namespace cvarplan {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input document (MDP file, layout file, config, solution document).
struct ParseError : Error {
    using Error::Error;
};

// A model failed validation and a caller insisted on a valid one.
struct ValidationError : Error {
    using Error::Error;
};

// A solver failed to converge or was handed an unsolvable model.
struct SolveError : Error {
    using Error::Error;
};

// Episode execution hit a step limit or violated a runtime contract.
struct ExecutionError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace cvarplan
