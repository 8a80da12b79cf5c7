#pragma once

#include <stdexcept>
#include <string>

namespace dsdkit {

// Shape/geometry mismatch between tensors or between a tensor and an op.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Non-finite values where finite ones are required.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Inconsistent or unsupported configuration (odd split width, bad ratio, ...).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed input file; message carries the location (line number / path).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A class has no samples, so its threshold is undefined.
class ThresholdError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace dsdkit
