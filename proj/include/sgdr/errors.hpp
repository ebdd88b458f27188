#pragma once

#include <stdexcept>
#include <string>

namespace sgdr {

// Error taxonomy used across the project. Everything derives from
// std::runtime_error so callers can catch broadly at the CLI boundary.

struct ValueError : std::runtime_error {
    explicit ValueError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when training code touches evaluation-only labels.
struct AccessViolation : std::runtime_error {
    explicit AccessViolation(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when a loss turns non-finite; carries the offending term name.
struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidStateError : std::runtime_error {
    explicit InvalidStateError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sgdr
