#pragma once

#include <stdexcept>
#include <string>

namespace baflow {

// Bad input: dimensions, domains, malformed files. CLI exit code 1.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A computation that cannot continue (non-finite field, floor hit, failed self-test). Exit 2.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem trouble. Exit 3.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
}

} // namespace baflow
