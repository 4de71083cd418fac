#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sisyphus {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter or argument is outside its domain.
class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// Too few samples or points for the requested estimate.
class InsufficientData : public Error {
public:
    using Error::Error;
};

/// Nonlinear least squares did not converge. Carries the iterate trace.
class FitFailed : public Error {
public:
    FitFailed(const std::string& what, std::vector<std::string> trace)
        : Error(what), trace_(std::move(trace)) {}
    const std::vector<std::string>& trace() const noexcept { return trace_; }

private:
    std::vector<std::string> trace_;
};

/// A trajectory produced a non-finite state.
class IntegrationDiverged : public Error {
public:
    IntegrationDiverged(std::size_t trajectory, std::size_t step)
        : Error("integration diverged in trajectory " + std::to_string(trajectory) +
                " at step " + std::to_string(step)),
          trajectory_(trajectory), step_(step) {}
    std::size_t trajectory() const noexcept { return trajectory_; }
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t trajectory_;
    std::size_t step_;
};

/// Drift response is not linear in the applied force; use smaller forces.
class ForceTooLarge : public Error {
public:
    using Error::Error;
};

/// Drift velocity is statistically indistinguishable from zero; use larger forces.
class ForceTooSmall : public Error {
public:
    using Error::Error;
};

/// Spectrum has no sign change and cannot be a recoil-induced resonance.
class NotARirLine : public Error {
public:
    using Error::Error;
};

}  // namespace sisyphus
