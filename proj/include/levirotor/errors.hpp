#pragma once

#include <stdexcept>
#include <string>

namespace levirotor {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid physical input (negative moments, non-prolate spheroid, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

class GimbalSingularity : public DomainError {
public:
    using DomainError::DomainError;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what, double time = 0.0)
        : Error(what), time_(time) {}
    double time() const { return time_; }

private:
    double time_;
};

// Particle left the escape sphere; carries the time at which it happened.
class EscapeError : public Error {
public:
    EscapeError(const std::string& what, double time) : Error(what), time_(time) {}
    double time() const { return time_; }

private:
    double time_;
};

}  // namespace levirotor
