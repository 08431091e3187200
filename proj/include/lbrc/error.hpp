#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lbrc {

// Bad user input: malformed files, flags, configuration keys or violated
// preconditions. Maps to CLI exit code 1.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Numerical failure during estimation or simulation. Maps to CLI exit code 2.
class ComputeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised by the rate harness when a replication yields a NaN/inf residual.
class NonFiniteResidual : public ComputeError {
public:
    NonFiniteResidual(const std::string& what, std::uint64_t seed)
        : ComputeError(what + " (replication seed " + std::to_string(seed) + ")"), seed_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
};

}  // namespace lbrc
