#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mikado {

/// Invalid numeric parameter (non-positive size, probability out of range, ...).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Geometry that cannot host the requested PSF (truncation disk leaves the frame).
class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller broke a precondition (dimension mismatch, negative input to Poisson, ...).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class FactorizationError : public std::runtime_error {
public:
    FactorizationError(const std::string& what, std::size_t row)
        : std::runtime_error(what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double residual, std::size_t iterations)
        : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
    double residual() const noexcept { return residual_; }
    std::size_t iterations() const noexcept { return iterations_; }

private:
    double residual_;
    std::size_t iterations_;
};

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& key, const std::string& what)
        : std::runtime_error("config key '" + key + "': " + what), key_(key) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

}  // namespace mikado
