// errors.hpp: exception types shared by every dimerlab module

#pragma once

#include <stdexcept>
#include <string>

namespace dimerlab {

enum class ErrorKind {
    Domain,          // argument outside the mathematical domain (kT <= 0, ...)
    Shape,           // wrong vector / matrix size
    Argument,        // malformed input (empty grid, mismatched grids, ...)
    DegenerateState, // subspace weight or normalisation point too small
    IllConditioned,
    Index,
    Divergence,
    Integration,
    FitFailure,
    Calibration,
    NonInvertible,
    OutOfRange,
    Parse,
    Io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Thrown by the HEOM integrator when the adaptive step collapses.
class IntegrationError : public Error {
public:
    IntegrationError(double time_reached, const std::string& what)
        : Error(ErrorKind::Integration, what), time_reached_(time_reached) {}
    double time_reached() const noexcept { return time_reached_; }

private:
    double time_reached_;
};

/// Thrown for a degenerate point inside a trace; carries the offending index.
class PointError : public Error {
public:
    PointError(ErrorKind kind, std::size_t index, const std::string& what)
        : Error(kind, what), index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// Config problems, with the dotted key path (empty when not key-specific).
class ParseError : public Error {
public:
    ParseError(std::string key, const std::string& what)
        : Error(ErrorKind::Parse, key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

} // namespace dimerlab
