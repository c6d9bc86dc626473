#pragma once

#include <stdexcept>
#include <string>

namespace lmr {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid or inconsistent configuration (bad keys, bad values, version skew
// between a config and the artifacts it references).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Problems with stored artifacts: model files, datasets, checkpoints.
class DataError : public Error {
public:
    using Error::Error;
};

// Numeric contract violations: shape mismatches, non-finite values,
// misuse of the differentiation tape.
class NumericError : public Error {
public:
    using Error::Error;
};

// Filesystem failures, always carrying the offending path.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace lmr
