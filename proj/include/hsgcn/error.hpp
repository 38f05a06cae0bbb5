#pragma once

#include <stdexcept>
#include <string>

namespace hsgcn {

// Exception hierarchy. The CLI maps each category onto a distinct exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input data or violated preconditions on data-derived arguments.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// File system and parse failures; messages carry the offending path.
class IoError : public Error {
public:
    using Error::Error;
};

// Non-finite values or failed numerical checks.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace hsgcn
