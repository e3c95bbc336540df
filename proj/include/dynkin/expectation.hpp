#pragma once

// Nonlinear conditional expectation induced by a driver: backward solves of
// BSDEs on a lattice, stopped at a cut (an antichain of nodes met exactly
// once by every surviving path).

#include <cstdint>
#include <span>
#include <vector>

#include "dynkin/driver.hpp"
#include "dynkin/model.hpp"

namespace dynkin {

inline constexpr double kFixedPointTol = 1e-12;
inline constexpr int kFixedPointMaxIter = 200;

struct BsdeSolution {
    NodeValues y;                 // NaN strictly after the cut
    NodeValues z;
    std::vector<double> k;        // m entries per node, flattened
    NodeValues proj_residual;     // projection residual per solved node
    std::vector<std::uint8_t> defined;

    std::span<const double> k_at(int node, int m) const {
        return { k.data() + static_cast<std::size_t>(node) * m,
                 static_cast<std::size_t>(m) };
    }
};

// Terminal data on a cut: on_cut marks the stopped nodes, value holds the
// payoff there.
struct Cut {
    std::vector<std::uint8_t> on_cut;
    NodeValues value;
};

Cut terminal_cut(const Lattice& lat, const NodeValues& terminal);

// Implicit-in-y, explicit-in-(z,k) backward solve.  Nodes strictly after the
// cut stay NaN.  Throws StepContractionViolated when lipschitz_C*dt >= 1,
// NonConvergence when a fixed point stalls.
BsdeSolution solve_bsde(const Lattice& lat, const DriverSpec& spec,
                        const Cut& cut);

// First-hit stopping rule: stop at the first visited member of `stops`;
// terminal nodes always stop.  Canonical form keeps only interior nodes with
// no ancestor in the set, sorted ascending.
struct StoppingRule {
    std::vector<int> stops;
};

StoppingRule canonicalize_rule(const Lattice& lat, std::vector<int> nodes);

// All canonical rules on the subtree rooted at `from` (antichains of interior
// nodes, including the empty rule).  Throws SizeLimit when the subtree has
// more than max_interior interior nodes.
std::vector<StoppingRule> enumerate_stopping_rules(const Lattice& lat, int from,
                                                   int max_interior = 22);

std::int64_t count_stopping_rules(const Lattice& lat, int from);

// Payoff-labelled cut of the game stopped at tau ^ sigma: the first node of
// either stop set along each path, paying lower there when tau arrives no
// later than sigma, upper when sigma is strictly first.
Cut game_cut(const Lattice& lat, const StoppingRule& tau,
             const StoppingRule& sigma, const ObstaclePair& obst);

// E^g_{., tau ^ sigma}[ I(tau,sigma) ]: solved values above the cut, NaN
// after it.
BsdeSolution g_expectation(const Lattice& lat, const DriverSpec& spec,
                           const StoppingRule& tau, const StoppingRule& sigma,
                           const ObstaclePair& obst);

// Forward evaluation of the linear-driver expectation through the discrete
// Girsanov weights: per node the child weights q solve
//   sum q = 1, sum q dW = b_z dt, sum q dN~(i) = gamma_i nu_i dt,
// and the y-coefficient acts as a discount 1/(1-beta dt).  Enumerates paths;
// intended for small lattices as an independent oracle.  `spec_at` maps a
// node to the linear driver in force there (constant controls pass the same
// spec everywhere).
double linear_density_value(const Lattice& lat,
                            const std::vector<const DriverSpec*>& spec_at,
                            const Cut& cut, int from = 0);

double linear_density_value(const Lattice& lat, const DriverSpec& spec,
                            const Cut& cut, int from = 0);

} // namespace dynkin
