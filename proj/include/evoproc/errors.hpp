#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace evoproc {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Vector/matrix size does not match the space it is used with.
class DimensionError : public Error {
public:
    DimensionError(const std::string& msg, long expected, long got)
        : Error(msg + " (expected " + std::to_string(expected) + ", got " + std::to_string(got) + ")"),
          expected(expected), got(got) {}
    long expected;
    long got;
};

/// A Gram matrix failed the symmetric-positive-definite check.
class NotSpdError : public Error {
public:
    using Error::Error;
};

/// A linear system was numerically singular. Carries the (t, lambda)
/// at which the resolvent solve failed.
class SingularSystemError : public Error {
public:
    SingularSystemError(const std::string& msg, double t, std::complex<double> lambda)
        : Error(msg + " at t=" + std::to_string(t) + ", lambda=(" + std::to_string(lambda.real()) +
                "," + std::to_string(lambda.imag()) + ")"),
          t(t), lambda(lambda) {}
    double t;
    std::complex<double> lambda;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Contour quadrature produced a result whose imaginary residue
/// exceeds the admissible bound.
class QuadratureError : public Error {
public:
    QuadratureError(const std::string& msg, double residual)
        : Error(msg + " (residual " + std::to_string(residual) + ")"), residual(residual) {}
    double residual;
};

/// An iterative solve failed to contract or ran out of iterations.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, std::vector<double> residual_history)
        : Error(msg), residual_history(std::move(residual_history)) {}
    std::vector<double> residual_history;
};

/// A trajectory exceeded the blow-up guard.
class BlowUpError : public Error {
public:
    BlowUpError(const std::string& msg, double t, double norm)
        : Error(msg + " at t=" + std::to_string(t) + " (Y-norm " + std::to_string(norm) + ")"),
          t(t), norm(norm) {}
    double t;
    double norm;
};

/// Two objects that must live on the same grid do not.
class GridMismatchError : public Error {
public:
    using Error::Error;
};

/// A configuration file or expression failed to parse or validate.
/// `position` is a byte offset into the offending text when known.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg, std::ptrdiff_t position = -1)
        : Error(position >= 0 ? msg + " at position " + std::to_string(position) : msg),
          position(position) {}
    std::ptrdiff_t position;
};

} // namespace evoproc
