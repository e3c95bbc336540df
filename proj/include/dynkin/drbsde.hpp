#pragma once

// Doubly reflected BSDE solvers on lattices: dynamic-programming truncation,
// Picard iteration on frozen driver processes, and the coupled Snell-envelope
// system, plus the finite-variation bookkeeping that comes with them.

#include <vector>

#include "dynkin/expectation.hpp"

namespace dynkin {

struct DrbsdeSolution {
    BsdeSolution base;
    NodeValues inc_up;    // dA  per node (pushes Y up at the lower barrier)
    NodeValues inc_down;  // dA' per node (pushes Y down at the upper barrier)
    // Cumulative A, A' per node (value at the node, increments applied on
    // leaving it).  Only populated on path-unique lattices.
    NodeValues cum_up;
    NodeValues cum_down;
    int picard_sweeps = 0; // 0 for the direct DP solve
};

// Backward truncation scheme: per node the reflected fixed point
//   y = clamp(sum_j p_j y_child + g(t, y, z, k) dt, lower, upper),
// with dA/dA' the clamp amounts.  Terminal values are the common barrier
// value.
DrbsdeSolution solve_drbsde_dp(const Lattice& lat, const DriverSpec& spec,
                               const ObstaclePair& obst);

inline constexpr double kPicardTol = 1e-11;
inline constexpr int kPicardMaxSweeps = 100;

// Iterates (U,V,l) -> solution of the DRBSDE with the driver frozen to the
// process g(t,U,V,l), each sweep solved by the DP scheme with a process
// driver.  Stops when successive Y iterates differ by < tol in sup norm.
DrbsdeSolution solve_drbsde_picard(const Lattice& lat, const DriverSpec& spec,
                                   const ObstaclePair& obst,
                                   double tol = kPicardTol,
                                   int max_sweeps = kPicardMaxSweeps);

// Snell envelope of a reward process: R_v = max(phi_v, E_v[R_child]),
// R_leaf = phi_leaf.
NodeValues snell_envelope(const Lattice& lat, const NodeValues& phi);

struct SnellPair {
    NodeValues J;
    NodeValues Jp;
    NodeValues shift;      // E[ xi_T + integral of g | F_.], the recentering
    NodeValues xi_tilde;   // lower - shift
    NodeValues zeta_tilde; // upper - shift
    int iterations = 0;
    double final_gap = 0.0; // sup change of the last sweep
    NodeValues reconstructed() const; // J - Jp + shift
};

// Coupled iteration J <- R(Jp + xi~), Jp <- R(J - zeta~) from (0,0); iterates
// are nondecreasing and reach exact stationarity on finite lattices.  The
// driver enters only through its process values g_v.
SnellPair solve_snell_system(const Lattice& lat, const NodeValues& g_process,
                             const ObstaclePair& obst);

struct MokobodskiWitnesses {
    NodeValues H;  // E[A_T  - A_.  | F_.]
    NodeValues Hp; // E[A'_T - A'_. | F_.]
};

// Builds the witness supermartingale pair from the DP solution with the
// process driver g.  H - Hp sits between the recentred obstacles, and H = J,
// Hp = J' for process drivers.
MokobodskiWitnesses mokobodski_witnesses(const Lattice& lat,
                                         const NodeValues& g_process,
                                         const ObstaclePair& obst);

MokobodskiWitnesses witnesses_from_solution(const Lattice& lat,
                                            const DrbsdeSolution& sol);

struct FvDecomposition {
    std::vector<double> inc_up;   // (d alpha)^+
    std::vector<double> inc_down; // (d alpha)^-
};

// Jordan-style minimal decomposition of a finite-variation increment
// sequence; any other decomposition d alpha = dB - dB' dominates it
// (dA <= dB, dA' <= dB' entrywise).
FvDecomposition canonical_decomposition(std::span<const double> dalpha);

// Worst-case residuals of the defining properties of a solution; every field
// should be <= 1e-12 (band/Skorokhod entries measure constraint violation,
// dynamics the equation residual).
struct InvariantReport {
    double band = 0.0;          // max(lower - Y, Y - upper)+
    double terminal = 0.0;      // |Y_T - terminal barrier value|
    double dynamics = 0.0;      // |Y - (E[Y_child] + g dt + dA - dA')|
    double negative_inc = 0.0;  // negative part of dA, dA'
    double singularity = 0.0;   // dA * dA' per node
    double skorokhod_up = 0.0;  // dA  * (Y - lower)
    double skorokhod_down = 0.0;// dA' * (upper - Y)
    double worst() const;
};

InvariantReport check_drbsde_invariants(const Lattice& lat,
                                        const DriverSpec& spec,
                                        const ObstaclePair& obst,
                                        const DrbsdeSolution& sol);

} // namespace dynkin
