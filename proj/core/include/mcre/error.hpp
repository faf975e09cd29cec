#pragma once

#include <stdexcept>
#include <string>

namespace mcre {

/// Base class for every error raised by the library. `module()` names the
/// component that detected the failure so front ends can report it.
class Error : public std::runtime_error {
public:
    Error(std::string module, const std::string& what)
        : std::runtime_error(what), module_(std::move(module)) {}

    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

/// Invalid model or environment parameters.
class ConfigurationError : public Error {
public:
    using Error::Error;
};

/// Bad call arguments (wrong sizes, p < 1, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Index outside a realized window.
class RangeError : public Error {
public:
    using Error::Error;
};

/// Non-finite values, log of zero, rejection starvation.
class NumericError : public Error {
public:
    using Error::Error;
};

/// A kernel could not produce a draw (e.g. an unnormalized row).
class KernelError : public Error {
public:
    using Error::Error;
};

/// The requested operation needs a representation the object lacks.
class CapabilityError : public Error {
public:
    using Error::Error;
};

/// P - eta * nu has negative mass beyond tolerance.
class MinorizationViolation : public Error {
public:
    using Error::Error;
};

/// No (C1, C2) pair within the caps satisfies the good-set inequalities.
class NoGoodConstantError : public Error {
public:
    using Error::Error;
};

/// The horizon contains no good time.
class NoGoodTimeError : public Error {
public:
    using Error::Error;
};

}  // namespace mcre
