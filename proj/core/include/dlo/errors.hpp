#pragma once

#include <stdexcept>
#include <string>

namespace dlo {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Instruction text or wire payload failed to parse.
struct ParseError : Error {
    using Error::Error;
};

/// Scene sampling exhausted its attempt budget or constraints conflict.
struct GenerationError : Error {
    using Error::Error;
};

/// Simulator instability or invalid sim request (bad grasp index etc).
struct SimError : Error {
    using Error::Error;
};

/// Operation invalid in the current state (double attach, no grasp, ...).
struct StateError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

/// Transport-level LLM failure after retries.
struct LlmError : Error {
    using Error::Error;
};

}  // namespace dlo
