#include "dynkin/drbsde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dynkin/detail/engine.hpp"

namespace dynkin {

namespace {

void validate_obstacles(const Lattice& lat, const ObstaclePair& obst) {
    const int n = lat.num_nodes();
    if (static_cast<int>(obst.lower.size()) != n ||
        static_cast<int>(obst.upper.size()) != n)
        throw ConfigError("obstacles: size mismatch with lattice");
    for (int v = 0; v < n; ++v)
        if (obst.lower[v] > obst.upper[v])
            throw ObstacleOrderViolation("lower obstacle exceeds the upper one");
    for (int v = lat.level_begin(lat.grid.steps); v < n; ++v)
        if (obst.lower[v] != obst.upper[v])
            throw TerminalMismatch("barriers must coincide at terminal nodes");
}

void fill_cumulative(const Lattice& lat, DrbsdeSolution& sol) {
    if (!lat.path_unique()) return;
    const int n = lat.num_nodes();
    sol.cum_up.assign(n, 0.0);
    sol.cum_down.assign(n, 0.0);
    for (int v = 1; v < n; ++v) { // level order => parent precedes child
        const int p = lat.node(v).parent;
        sol.cum_up[v] = sol.cum_up[p] + sol.inc_up[p];
        sol.cum_down[v] = sol.cum_down[p] + sol.inc_down[p];
    }
}

} // namespace

DrbsdeSolution solve_drbsde_dp(const Lattice& lat, const DriverSpec& spec,
                               const ObstaclePair& obst) {
    validate_obstacles(lat, obst);
    const Cut cut = terminal_cut(lat, obst.lower);
    DrbsdeSolution out;
    detail::backward_solve(lat, spec, cut, &obst, out.base, &out.inc_up,
                           &out.inc_down);
    fill_cumulative(lat, out);
    return out;
}

DrbsdeSolution solve_drbsde_picard(const Lattice& lat, const DriverSpec& spec,
                                   const ObstaclePair& obst, double tol,
                                   int max_sweeps) {
    validate_obstacles(lat, obst);
    const int n = lat.num_nodes();
    const int m = lat.marks.size();
    if (spec.lipschitz_C * lat.grid.dt >= 1.0)
        throw StepContractionViolated(
            "driver Lipschitz constant times dt must stay below 1");

    NodeValues prev_y(n, 0.0), prev_z(n, 0.0);
    std::vector<double> prev_k(static_cast<std::size_t>(n) * m, 0.0);
    std::vector<double> frozen(n, 0.0);

    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        for (int v = 0; v < lat.num_interior(); ++v) {
            const double t = lat.grid.time(lat.node(v).level);
            frozen[v] = eval_driver(
                spec, lat.marks, v, t, prev_y[v], prev_z[v],
                { prev_k.data() + static_cast<std::size_t>(v) * m,
                  static_cast<std::size_t>(m) });
        }
        DrbsdeSolution cur = solve_drbsde_dp(lat, process_driver(frozen), obst);
        double diff = 0.0;
        for (int v = 0; v < n; ++v)
            diff = std::max(diff, std::abs(cur.base.y[v] - prev_y[v]));
        prev_y = cur.base.y;
        prev_z = cur.base.z;
        prev_k = cur.base.k;
        if (diff < tol) {
            cur.picard_sweeps = sweep;
            return cur;
        }
    }
    throw NonConvergence("picard sweeps did not settle within the cap");
}

NodeValues snell_envelope(const Lattice& lat, const NodeValues& phi) {
    const int n = lat.num_nodes();
    if (static_cast<int>(phi.size()) != n)
        throw ConfigError("snell envelope: size mismatch with lattice");
    NodeValues r(phi);
    for (int lvl = lat.grid.steps - 1; lvl >= 0; --lvl)
        for (int v = lat.level_begin(lvl); v < lat.level_end(lvl); ++v) {
            double mean = 0.0;
            for (const auto& e : lat.edges(v)) mean += e.p * r[e.child];
            r[v] = std::max(phi[v], mean);
        }
    return r;
}

NodeValues SnellPair::reconstructed() const {
    NodeValues y(J.size());
    for (std::size_t v = 0; v < y.size(); ++v) y[v] = J[v] - Jp[v] + shift[v];
    return y;
}

SnellPair solve_snell_system(const Lattice& lat, const NodeValues& g_process,
                             const ObstaclePair& obst) {
    validate_obstacles(lat, obst);
    const int n = lat.num_nodes();
    if (static_cast<int>(g_process.size()) != n)
        throw ConfigError("snell system: driver process size mismatch");

    SnellPair out;
    out.shift.assign(n, 0.0);
    for (int v = lat.level_begin(lat.grid.steps); v < n; ++v)
        out.shift[v] = obst.lower[v];
    for (int lvl = lat.grid.steps - 1; lvl >= 0; --lvl)
        for (int v = lat.level_begin(lvl); v < lat.level_end(lvl); ++v) {
            double mean = 0.0;
            for (const auto& e : lat.edges(v)) mean += e.p * out.shift[e.child];
            out.shift[v] = mean + g_process[v] * lat.grid.dt;
        }
    out.xi_tilde.resize(n);
    out.zeta_tilde.resize(n);
    for (int v = 0; v < n; ++v) {
        out.xi_tilde[v] = obst.lower[v] - out.shift[v];
        out.zeta_tilde[v] = obst.upper[v] - out.shift[v];
    }

    out.J.assign(n, 0.0);
    out.Jp.assign(n, 0.0);
    NodeValues payoff(n);
    const int cap = 4 * (n + 2);
    for (int it = 1; it <= cap; ++it) {
        for (int v = 0; v < n; ++v) payoff[v] = out.Jp[v] + out.xi_tilde[v];
        NodeValues j_next = snell_envelope(lat, payoff);
        for (int v = 0; v < n; ++v) payoff[v] = j_next[v] - out.zeta_tilde[v];
        NodeValues jp_next = snell_envelope(lat, payoff);
        double gap = 0.0;
        for (int v = 0; v < n; ++v) {
            gap = std::max(gap, std::abs(j_next[v] - out.J[v]));
            gap = std::max(gap, std::abs(jp_next[v] - out.Jp[v]));
        }
        out.J = std::move(j_next);
        out.Jp = std::move(jp_next);
        out.iterations = it;
        out.final_gap = gap;
        if (gap == 0.0) return out; // exact stationarity
    }
    throw NonConvergence("coupled snell iteration did not reach stationarity");
}

MokobodskiWitnesses witnesses_from_solution(const Lattice& lat,
                                            const DrbsdeSolution& sol) {
    const int n = lat.num_nodes();
    MokobodskiWitnesses w;
    w.H.assign(n, 0.0);
    w.Hp.assign(n, 0.0);
    for (int lvl = lat.grid.steps - 1; lvl >= 0; --lvl)
        for (int v = lat.level_begin(lvl); v < lat.level_end(lvl); ++v) {
            double mh = 0.0, mhp = 0.0;
            for (const auto& e : lat.edges(v)) {
                mh += e.p * w.H[e.child];
                mhp += e.p * w.Hp[e.child];
            }
            w.H[v] = sol.inc_up[v] + mh;
            w.Hp[v] = sol.inc_down[v] + mhp;
        }
    return w;
}

MokobodskiWitnesses mokobodski_witnesses(const Lattice& lat,
                                         const NodeValues& g_process,
                                         const ObstaclePair& obst) {
    const DrbsdeSolution sol =
        solve_drbsde_dp(lat, process_driver(g_process), obst);
    return witnesses_from_solution(lat, sol);
}

FvDecomposition canonical_decomposition(std::span<const double> dalpha) {
    FvDecomposition d;
    d.inc_up.reserve(dalpha.size());
    d.inc_down.reserve(dalpha.size());
    for (double x : dalpha) {
        d.inc_up.push_back(std::max(x, 0.0));
        d.inc_down.push_back(std::max(-x, 0.0));
    }
    return d;
}

double InvariantReport::worst() const {
    return std::max({ band, terminal, dynamics, negative_inc, singularity,
                      skorokhod_up, skorokhod_down });
}

InvariantReport check_drbsde_invariants(const Lattice& lat,
                                        const DriverSpec& spec,
                                        const ObstaclePair& obst,
                                        const DrbsdeSolution& sol) {
    const int n = lat.num_nodes();
    const int m = lat.marks.size();
    const double dt = lat.grid.dt;
    InvariantReport r;
    std::vector<double> child;
    for (int v = 0; v < n; ++v) {
        const double y = sol.base.y[v];
        r.band = std::max({ r.band, obst.lower[v] - y, y - obst.upper[v] });
        if (lat.is_terminal(v)) {
            r.terminal = std::max(r.terminal, std::abs(y - obst.lower[v]));
            continue;
        }
        const double da = sol.inc_up[v];
        const double dap = sol.inc_down[v];
        r.negative_inc = std::max({ r.negative_inc, -da, -dap });
        r.singularity = std::max(r.singularity, std::abs(da * dap));
        r.skorokhod_up = std::max(r.skorokhod_up,
                                  std::abs(da * (y - obst.lower[v])));
        r.skorokhod_down = std::max(r.skorokhod_down,
                                    std::abs(dap * (obst.upper[v] - y)));
        lat.gather_children(v, sol.base.y, child);
        double mean = 0.0;
        auto es = lat.edges(v);
        for (std::size_t j = 0; j < es.size(); ++j) mean += es[j].p * child[j];
        const double g = eval_driver(spec, lat.marks, v,
                                     lat.grid.time(lat.node(v).level), y,
                                     sol.base.z[v], sol.base.k_at(v, m));
        r.dynamics = std::max(r.dynamics,
                              std::abs(y - (mean + g * dt + da - dap)));
    }
    r.band = std::max(r.band, 0.0);
    return r;
}

} // namespace dynkin
