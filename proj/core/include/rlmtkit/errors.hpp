#pragma once

#include <stdexcept>
#include <string>

namespace rlmtkit {

/// Caller violated an operation precondition (bad argument, empty input, ...).
struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A file or record could not be read/parsed (maps to CLI exit code 3).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A non-finite value surfaced where the math requires finiteness (CLI exit code 4).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace rlmtkit
