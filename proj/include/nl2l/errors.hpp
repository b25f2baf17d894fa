#pragma once

#include <stdexcept>
#include <string>

namespace nl2l {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (index out of range, bad shape).
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Configuration could not be parsed or failed cross-field validation.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// The network does not fit on the 32x32 synapse crossbar.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// Random and optimal reference returns coincide; the task cannot be scored.
class NotNormalizable : public Error {
public:
    using Error::Error;
};

} // namespace nl2l
