#pragma once

#include <stdexcept>
#include <string>

namespace atd {

// Error taxonomy shared by the library and the CLI exit-code mapping.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad arguments, malformed configs, shape mismatches.
struct validation_error : error {
    using error::error;
};

// Singular systems, divergence, non-finite values produced at runtime.
struct numeric_error : error {
    using error::error;
};

// File format and filesystem failures.
struct io_error : error {
    using error::error;
};

} // namespace atd
