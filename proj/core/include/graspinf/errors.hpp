#pragma once

#include <stdexcept>
#include <string>

namespace graspinf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shape inference or invocation-time shape mismatch. The message names the layer.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// An operation was called in the wrong order (e.g. backward before forward).
class StateError : public Error {
public:
    using Error::Error;
};

/// NaN/Inf encountered in inputs, losses or gradients.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Malformed file, unparseable record or inconsistent data.
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace graspinf
