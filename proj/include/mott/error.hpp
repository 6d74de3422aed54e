#pragma once

#include <stdexcept>
#include <string>

namespace mott {

/// Invalid model or run parameters.
class config_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Operation called outside its domain (e.g. shrinking a window).
class usage_error : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A linear solve or fixed-point iteration did not meet its tolerance.
class numeric_error : public std::runtime_error {
public:
    numeric_error(const std::string& what, double residual)
        : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
          residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// The environment window does not reach far enough for the requested
/// tail accuracy. Carries the radius (in sites, per side) that would suffice.
class insufficient_window : public std::runtime_error {
public:
    explicit insufficient_window(long required_radius)
        : std::runtime_error("insufficient window: radius " + std::to_string(required_radius) +
                             " required"),
          required_radius_(required_radius) {}

    long required_radius() const noexcept { return required_radius_; }

private:
    long required_radius_;
};

}  // namespace mott
