#pragma once

// Dynkin games and mixed control/stopping games on lattices: exhaustive
// verification of values and saddle points against the reflected-BSDE
// solution.

#include <cstdint>
#include <vector>

#include "dynkin/drbsde.hpp"

namespace dynkin {

struct GameCaps {
    int max_interior = 22;
    std::int64_t max_rule_pairs = 700000;
};

struct GameReport {
    NodeValues upper;   // min over sigma of max over tau
    NodeValues lower;   // max over tau of min over sigma
    NodeValues y;       // DRBSDE solution
    double value_gap = 0.0;   // max |upper - lower| over evaluated nodes
    double drbsde_gap = 0.0;  // max |upper - y|
    bool value_exists = false;
    std::int64_t rules = 0;
    std::int64_t pairs = 0;
};

// Brute-force upper/lower game values at every node by enumerating canonical
// stopping-rule pairs on each subtree; solves are cached by the induced
// payoff cut.  Requires the driver to pass the jump-monotonicity check
// unless `force` is set.
GameReport game_values_bruteforce(const Lattice& lat, const DriverSpec& spec,
                                  const ObstaclePair& obst,
                                  const GameCaps& caps = {},
                                  bool force = false);

struct SaddleReport {
    StoppingRule tau_star;
    StoppingRule sigma_star;
    double value = 0.0;          // criterion at (tau*, sigma*)
    double y_at_start = 0.0;
    bool verified = false;       // both saddle inequalities hold within slack
    double worst_violation = 0.0;
    std::int64_t deviations = 0;

    // epsilon-rules and their exhaustive loss bound (<= K*eps expected).
    double eps = 0.0;
    double K = 0.0;
    StoppingRule tau_eps;
    StoppingRule sigma_eps;
    double eps_worst_loss = 0.0; // max excess of any deviation beyond Y_S
    bool eps_verified = false;
};

inline constexpr double kContactTol = 1e-10;
inline constexpr double kSaddleSlack = 1e-9;

// Contact-set rules tau* = first {Y = lower}, sigma* = first {Y = upper} at
// or after `from` (scaled tolerance), checked against every enumerated
// deviation.  eps > 0 additionally builds the eps-rules {Y <= lower+eps},
// {Y >= upper-eps} and checks the K*eps loss bound with K = e^{CT}(1+CT).
SaddleReport extract_saddle(const Lattice& lat, const DriverSpec& spec,
                            const ObstaclePair& obst, const DrbsdeSolution& sol,
                            int from, double eps = 0.0,
                            const GameCaps& caps = {});

// Mixed game: finite control sets acting through a driver family; the solved
// driver is g = max_u min_v family[u][v].
struct MixedGameSpec {
    int n_u = 0;
    int n_v = 0;
    std::vector<DriverSpec> family; // row-major (u,v)
    const DriverSpec& member(int u, int v) const { return family[u * n_v + v]; }
};

struct MixedGameReport {
    DrbsdeSolution sol;         // solution under the sup-inf driver
    std::vector<int> u_star;    // per-node maximizer (lexicographic ties)
    std::vector<int> v_star;    // per-node minimizer given u_star
    bool isaacs_ok = false;     // per-node saddle inequalities at (Y,Z,k)
    double isaacs_violation = 0.0;
    SaddleReport saddle;
};

MixedGameReport solve_mixed_game(const Lattice& lat, const MixedGameSpec& spec,
                                 const ObstaclePair& obst,
                                 const GameCaps& caps = {}, bool force = false,
                                 double eps = 0.0);

// Exhaustive mixed value: controls range over all per-interior-node maps into
// U (resp. V), stopping rules over all canonical rules; value at `from` of
//   min_{(v,sigma)} max_{(u,tau)} E^{u,v}[ I(tau,sigma) ].
struct MixedBruteForce {
    double upper = 0.0;
    double lower = 0.0;
    std::int64_t evaluations = 0;
};

MixedBruteForce mixed_game_bruteforce(const Lattice& lat,
                                      const MixedGameSpec& spec,
                                      const ObstaclePair& obst, int from = 0,
                                      std::int64_t max_evals = 2000000);

// For families that are linear in (y,z,k): re-evaluates the game criterion of
// given control processes and rules through the discrete density weights and
// returns the worst gap against the backward solve over all rule pairs.
double mixed_density_crosscheck(const Lattice& lat, const MixedGameSpec& spec,
                                const ObstaclePair& obst,
                                const std::vector<int>& u_process,
                                const std::vector<int>& v_process,
                                const GameCaps& caps = {});

// Solves the DRBSDE for a fixed pair of control processes (per-node indices).
DrbsdeSolution solve_controlled(const Lattice& lat, const MixedGameSpec& spec,
                                const ObstaclePair& obst,
                                const std::vector<int>& u_process,
                                const std::vector<int>& v_process);

} // namespace dynkin
