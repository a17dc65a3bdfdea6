#pragma once

#include <stdexcept>
#include <string>

namespace charwave
{

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Inputs that violate a documented precondition (dimension mismatch,
/// non-unit direction, tangential line, bad band, ...).
class DomainError : public Error
{
public:
    using Error::Error;
};

/// A numerical procedure did not reach its tolerance within budget.
class ToleranceError : public Error
{
public:
    ToleranceError(const std::string& what, double achieved)
        : Error(what + " (achieved error estimate " + std::to_string(achieved) + ")"),
          achieved_(achieved)
    {
    }

    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

/// Malformed or inconsistent configuration text. Carries the offending line.
class ConfigError : public Error
{
public:
    ConfigError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line)
    {
    }

    int line() const noexcept { return line_; }

private:
    int line_;
};

class IoError : public Error
{
public:
    using Error::Error;
};

} // namespace charwave
