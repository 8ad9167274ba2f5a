#pragma once

#include <stdexcept>
#include <string>

namespace gravsim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A truncated Fock representation lost more probability than allowed.
class TruncationError : public Error {
public:
    TruncationError(const std::string& what, double norm_deficit)
        : Error(what + " (norm deficit " + std::to_string(norm_deficit) + ")"),
          norm_deficit_(norm_deficit) {}

    double norm_deficit() const noexcept { return norm_deficit_; }

private:
    double norm_deficit_;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// Quadrature grid does not cover enough of the outcome distribution.
class GridCoverageError : public Error {
public:
    GridCoverageError(const std::string& what, double mass)
        : Error(what + " (covered mass " + std::to_string(mass) + ")"), mass_(mass) {}

    double mass() const noexcept { return mass_; }

private:
    double mass_;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace gravsim
