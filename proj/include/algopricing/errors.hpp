#pragma once

#include <stdexcept>
#include <string>

namespace algopricing {

// Invalid model or agent parameters (non-positive mu, length mismatch, ...).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Argument outside the domain of an operation (non-finite price, bad index).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Iterative method failed or produced a non-finite value.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Requested configuration is valid but not supported by the routine.
class UnsupportedError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Experiment configuration rejected before any run starts.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace algopricing
