#pragma once

#include <stdexcept>
#include <string>

namespace sindybrid {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller violated a precondition (dimension mismatch, bad argument).
class UsageError : public Error {
public:
    using Error::Error;
};

/// Invalid or incomplete configuration (parameter sets, library specs, campaigns).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A model evaluation produced NaN or Inf.
class NumericDomainError : public Error {
public:
    NumericDomainError(const std::string& what, std::string equation)
        : Error(what), equation_(std::move(equation)) {}

    const std::string& equation() const noexcept { return equation_; }

private:
    std::string equation_;
};

/// The adaptive integrator could not reach the end of the requested grid.
class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, double last_time)
        : Error(what), last_time_(last_time) {}

    double last_time() const noexcept { return last_time_; }

private:
    double last_time_;
};

/// Ground-truth simulation failed while building a campaign.
class CampaignError : public Error {
public:
    using Error::Error;
};

/// Residual matrix could not be formed (too many rows excluded).
class ResidualError : public Error {
public:
    using Error::Error;
};

/// Wraps an error raised inside one pipeline stage.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

} // namespace sindybrid
