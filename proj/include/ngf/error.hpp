#pragma once

#include <stdexcept>
#include <string>

namespace ngf {

// Non-finite inputs, out-of-domain arguments.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Requested derivative order beyond what the ansatz provides.
class UnsupportedOrderError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class LinalgError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite quantity met while assembling the Galerkin system.
class AssemblyError : public std::runtime_error {
public:
    AssemblyError(const std::string& what, double sample)
        : std::runtime_error(what), sample_(sample) {}
    double sample() const noexcept { return sample_; }

private:
    double sample_;
};

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace ngf
