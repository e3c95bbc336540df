#pragma once

// Comparison, strict comparison and a priori estimates exercised as randomized
// harnesses over generated instance families.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dynkin/drbsde.hpp"
#include "dynkin/rng.hpp"

namespace dynkin {

struct Instance {
    Lattice lat;
    DriverSpec driver;
    ObstaclePair obst;
};

struct InstanceOptions {
    int max_steps = 6;
    int max_marks = 2;
    double max_horizon = 1.0;
    double max_lipschitz = 1.0;
    // Keeps every backward step monotone in the child values: gamma >= -0.9,
    // nu_i dt (1 + psi_i) <= 0.5, |b_z| sqrt(dt) small, C dt <= 0.3.
    bool monotone_regime = true;
    double obstacle_scale = 1.0;
    double gap_scale = 1.0;
    bool allow_nonlinear = true;
};

// Random solvable instance (lattice + driver + obstacles), adapted obstacle
// processes drawn per node with a common terminal value.
Instance random_instance(Rng& rng, const InstanceOptions& opt);

// Instance 1 dominates instance 2: same lattice, g1 >= g2 (additive
// nonnegative offset), lower1 >= lower2, upper1 >= upper2, both pairs valid.
struct OrderedPair {
    std::shared_ptr<const Lattice> lat;
    DriverSpec driver1, driver2;
    ObstaclePair obst1, obst2;
};

OrderedPair random_ordered_pair(Rng& rng, const InstanceOptions& opt);

struct ComparisonRecord {
    bool ordered_inputs = true; // certificate re-verified node-wise
    double worst_violation = 0.0; // max (Y2 - Y1)+ over nodes
    bool ok = false;
};

// Verifies the ordering certificate, solves both instances and checks
// Y2 <= Y1 + tol everywhere.  Throws OrderingCertificateFalse when the
// declared ordering fails on inspection.
ComparisonRecord check_comparison(const OrderedPair& pair, double tol = 1e-10);

enum class StrictStatus { Ok, HypothesisUnmet, Violated };

struct StrictComparisonRecord {
    StrictStatus status = StrictStatus::Ok;
    double worst_violation = 0.0; // |Y1-Y2| at or before the first increase
    bool solutions_differ_after = false;
    int theta_nodes = 0; // nodes on the first-increase antichain
    std::string detail;
};

// Constructed pair: instance 2 solved first, instance 1 raises the lower
// obstacle strictly below the first contact antichain by less than the
// contact slack.  The solutions must then agree at every node up to and
// including the first increase of any A along each path, and differ after it.
StrictComparisonRecord strict_comparison_case(Rng& rng,
                                              const InstanceOptions& opt);

// Checks the strict-comparison hypothesis/conclusion on an arbitrary pair:
// if Y1 = Y2 at `from` and gamma > -1 strictly, the solutions agree on every
// node between `from` and the first A-increase along each path.
StrictComparisonRecord check_strict_comparison(const OrderedPair& pair,
                                               int from, double tol = 1e-10);

struct EstimateParams {
    double C = 1.0;    // common Lipschitz bound of the two drivers
    double eta = 1.0;  // requires eta <= 1/C^2
    double beta = 5.0; // requires beta >= 3/eta + 2C
};

struct EstimateRecord {
    double lhs = 0.0;   // (Y1_t - Y2_t)^2
    double rhs = 0.0;
    bool ok = false;
    double slack = 0.0; // rhs - lhs
};

// Discrete form of the universal-constants bound
//   (Y1_t - Y2_t)^2 <= e^{beta (T-t)} E[ sup_{s>=t} dxi_s^2
//                                        + sup_{s>=t} dzeta_s^2 | F_t]
//                      + eta E[ sum_{s>=t} e^{beta (s-t)} gbar_s^2 dt | F_t],
// with gbar the node-wise sup-difference of the drivers (finite for additive
// perturbations) and conditional expectations/pathwise sups exact on the
// lattice.
EstimateRecord check_apriori_estimate(const Lattice& lat,
                                      const DriverSpec& g1,
                                      const ObstaclePair& o1,
                                      const DriverSpec& g2,
                                      const ObstaclePair& o2,
                                      const NodeValues& gbar,
                                      const EstimateParams& params, int node);

// Same bound evaluated at every node with a single pair of solves; returns
// the record with the smallest slack, `worst_node` receiving its node id.
EstimateRecord check_apriori_estimate_all(const Lattice& lat,
                                          const DriverSpec& g1,
                                          const ObstaclePair& o1,
                                          const DriverSpec& g2,
                                          const ObstaclePair& o2,
                                          const NodeValues& gbar,
                                          const EstimateParams& params,
                                          int* worst_node = nullptr);

// Perturbed pair for the estimate harness: driver 2 adds a bounded per-node
// offset (gbar = |offset|), obstacles shift by bounded adapted processes.
struct PerturbedPair {
    std::shared_ptr<const Lattice> lat;
    DriverSpec driver1, driver2;
    ObstaclePair obst1, obst2;
    NodeValues gbar;
};

PerturbedPair random_perturbed_pair(Rng& rng, const InstanceOptions& opt,
                                    const EstimateParams& params);

// Single-solution bound (second instance identically zero): Y_t^2 <=
// e^{beta(T-t)} E[sup xi^2 + sup zeta^2 | F_t] + eta E[sum e^{beta(s-t)}
// g(s,0,0,0)^2 dt | F_t].
EstimateRecord check_zero_estimate(const Lattice& lat, const DriverSpec& g,
                                   const ObstaclePair& obst,
                                   const EstimateParams& params, int node);

} // namespace dynkin
