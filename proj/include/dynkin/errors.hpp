#pragma once

#include <stdexcept>
#include <string>

namespace dynkin {

// Branch probabilities would be <= 0 for the requested (marks, dt).
struct CalibrationInfeasible : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A configured cap (node count, interior nodes, rule pairs) was exceeded.
struct SizeLimit : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ObstacleOrderViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TerminalMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnknownCatalogId : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Driver fails the monotonicity assumption needed by the game theorems.
struct MonotonicityViolated : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// C*dt >= 1: the per-node implicit fixed point is not a contraction.
struct StepContractionViolated : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CflViolated : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A declared ordering between two problem instances does not hold.
struct OrderingCertificateFalse : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace dynkin
