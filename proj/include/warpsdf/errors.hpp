#pragma once

#include <stdexcept>
#include <string>

namespace warpsdf {

// Non-finite value escaped a numeric kernel (bad parameters, diverged MLP).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Ray origin starts inside (or on) the geometry.
struct InsideStartError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// SDF gradient too small to define a normal (medial axis).
struct DegenerateNormalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Screen-projection Jacobian lost rank (cannot happen for the provided
// cameras; kept as a guard).
struct RankDeficientError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad config file / schema violation / unknown key.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace warpsdf
