#pragma once
#include <stdexcept>
#include <string>

namespace l0group {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Inconsistent sizes between inputs. `dimension()` names the offending one.
class DimensionError : public Error
{
public:
    DimensionError(std::string dimension, const std::string& what)
        : Error(what), dimension_(std::move(dimension))
    {}
    const std::string& dimension() const noexcept { return dimension_; }

private:
    std::string dimension_;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error
{
public:
    using Error::Error;
};

/// Malformed user input (files, configuration values).
class InputError : public Error
{
public:
    using Error::Error;
};

} // namespace l0group
