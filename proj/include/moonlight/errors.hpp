#pragma once

#include <stdexcept>

namespace moonlight {

// Malformed or inconsistent input data (showmap text, binary traces,
// manifests, mixed trace widths).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad request: unusable flags, unreadable inputs, unknown algorithms.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A distillation precondition does not hold (missing or non-positive
// weights, missing tuple data, instance over the exact-solver limit).
struct PreconditionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace moonlight
