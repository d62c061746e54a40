#pragma once

#include <stdexcept>
#include <string>

namespace edbn {

// Error taxonomy. The CLI maps these onto exit codes, so keep the
// categories stable: schema/io -> 2, everything numeric/usage -> 3.

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Incompatible matrix/vector shapes.
struct ShapeError : Error {
    using Error::Error;
};

// Bad argument value (negative count, fraction out of range, ...).
struct ValueError : Error {
    using Error::Error;
};

// Malformed input file: wrong header, unparseable cell, bad model file.
struct SchemaError : Error {
    using Error::Error;
};

// Filesystem-level failure (open/read/write).
struct IoError : Error {
    using Error::Error;
};

// Undefined numeric result, e.g. correlation of a constant vector.
struct NumericError : Error {
    using Error::Error;
};

// Invalid model configuration.
struct ConfigError : Error {
    using Error::Error;
};

} // namespace edbn
