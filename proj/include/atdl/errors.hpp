#ifndef ATDL_ERRORS_HPP
#define ATDL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace atdl {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

/// Incompatible matrix/vector dimensions. Message names both shapes.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid argument values (bad counts, infeasible splits, unknown tags).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent data / model files.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string &msg, std::size_t epoch, double learning_rate)
        : Error(msg), epoch(epoch), learning_rate(learning_rate) {}
    std::size_t epoch;
    double learning_rate;
};

/// A regularized covariance could not be inverted.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// A target label had no samples when class statistics were requested.
class MissingClassError : public Error {
public:
    MissingClassError(const std::string &msg, std::size_t label) : Error(msg), label(label) {}
    std::size_t label;
};

/// Correlation of a constant sequence is undefined.
class UndefinedCorrelationError : public Error {
public:
    using Error::Error;
};

} // namespace atdl

#endif
