#pragma once

#include <stdexcept>
#include <string>

namespace popsynth {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input file (bad syntax, unreadable).
struct ParseError : Error {
    using Error::Error;
};

// Structurally valid input that violates a domain invariant.
struct ValidationError : Error {
    using Error::Error;
};

// Pipeline configuration or stage-dependency problem.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace popsynth
