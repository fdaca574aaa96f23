#pragma once

#include <stdexcept>

namespace measched {

/// A configuration block violates its invariants (shapes, ranges, keys).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An operation was called in the wrong lifecycle state.
class UsageError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Training produced a non-finite value; the message carries diagnostics.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace measched
