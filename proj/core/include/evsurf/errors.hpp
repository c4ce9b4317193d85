// Exception hierarchy shared by the whole library.
#pragma once

#include <stdexcept>
#include <string>

namespace evsurf {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// --- container/file format ---------------------------------------------------

/// File does not start with the expected magic bytes.
class BadMagic : public Error {
public:
    using Error::Error;
};

/// Unknown format version or element type byte.
class UnsupportedVersion : public Error {
public:
    using Error::Error;
};

/// Payload shorter or longer than the header-declared extent.
class TruncatedPayload : public Error {
public:
    using Error::Error;
};

/// A NaN or infinity was read from a container payload.
class NonFiniteValue : public Error {
public:
    using Error::Error;
};

/// Underlying stream/open/write failure.
class IoFailure : public Error {
public:
    using Error::Error;
};

/// Array dimensionality or extent differs from what the caller required.
class DimMismatch : public Error {
public:
    using Error::Error;
};

// --- numerical preconditions -------------------------------------------------

/// Grid extents below the minimum the discretization supports.
class GridTooSmall : public Error {
public:
    using Error::Error;
};

/// Metric determinant at or below the positive-definiteness threshold.
class DegenerateMetric : public Error {
public:
    using Error::Error;
};

/// A vector handed to a tangent-space operation has a normal component.
class NotTangent : public Error {
public:
    using Error::Error;
};

/// Operation invoked with an assembly/solve mode it does not support.
class ModeMismatch : public Error {
public:
    using Error::Error;
};

/// Trajectory seed lies outside the parameter domain.
class SeedOutOfDomain : public Error {
public:
    using Error::Error;
};

/// Non-positive smoothing width.
class BadSigma : public Error {
public:
    using Error::Error;
};

/// Surface fit requested with an empty center list.
class NoCenters : public Error {
public:
    using Error::Error;
};

/// Normal equations of the surface fit are numerically singular.
class SingularFit : public Error {
public:
    using Error::Error;
};

/// Synthetic scene parameters would move texture support outside the domain.
class MotionExitsDomain : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent run configuration.
class BadConfig : public Error {
public:
    using Error::Error;
};

} // namespace evsurf
