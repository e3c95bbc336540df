#pragma once

// Internal: single backward induction used by the plain and the reflected
// solvers.  When `obst` is non-null each step's fixed point is the reflected
// map y = clamp(mean + g(t,y,z,k) dt) and the clamp amounts are returned
// through inc_up / inc_down.

#include <span>

#include "dynkin/expectation.hpp"

namespace dynkin::detail {

void backward_solve(const Lattice& lat, const DriverSpec& spec, const Cut& cut,
                    const ObstaclePair* obst, BsdeSolution& out,
                    NodeValues* inc_up, NodeValues* inc_down);

// Per-node driver variant (controlled dynamics); spec_at must cover every
// node, lipschitz_C bounds all of them.
void backward_solve(const Lattice& lat,
                    std::span<const DriverSpec* const> spec_at,
                    double lipschitz_C, const Cut& cut,
                    const ObstaclePair* obst, BsdeSolution& out,
                    NodeValues* inc_up, NodeValues* inc_down);

} // namespace dynkin::detail
