#include "dynkin/pide.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "dynkin/detail/lattice_builder.hpp"

namespace dynkin {

namespace {

double gamma_weight(const PideDriver& f, double x, double e) {
    return f.gamma ? f.gamma(x, e) : 1.0;
}

double eval_grid_driver(const PideDriver& f, double y, double z, double r) {
    if (f.form == "zero") return 0.0;
    if (f.form == "linear") return f.a * y + f.b * z + f.d * r + f.c;
    throw ConfigError("unknown grid driver form: " + f.form);
}

// Compensating the jump drift folds the mark mass into the first-order term.
double effective_drift(const SdeSpec& sde, double x) {
    double drift = sde.b(x);
    for (const auto& mk : sde.marks.atoms)
        drift -= sde.beta(x, mk.e) * mk.nu;
    return drift;
}

double driver_jump_drain(const PideProblem& prob, const FdGrid& grid) {
    if (prob.f.form == "zero" || prob.f.d == 0.0) return 0.0;
    double worst = 0.0;
    for (int j = 0; j < grid.points; ++j) {
        double s = 0.0;
        for (const auto& mk : prob.sde.marks.atoms)
            s += gamma_weight(prob.f, grid.x(j), mk.e) * mk.nu;
        worst = std::max(worst, prob.f.d * s);
    }
    return worst;
}

struct InterpWeights {
    int j0 = 0;
    double w0 = 1.0, w1 = 0.0; // value = w0*u[j0] + w1*u[j0+1]
};

// Off-grid targets collapse onto the boundary cell.
InterpWeights locate(const FdGrid& grid, double x) {
    if (x <= grid.xmin) return { 0, 1.0, 0.0 };
    if (x >= grid.xmax) return { grid.points - 2, 0.0, 1.0 };
    const double s = (x - grid.xmin) / grid.dx();
    int j0 = std::min(static_cast<int>(s), grid.points - 2);
    return { j0, 1.0 - (s - j0), s - j0 };
}

bool constant_coefficients(const SdeSpec& sde, double x0) {
    const int m = sde.marks.size();
    const double bc = sde.b(x0), sc = sde.sigma(x0);
    std::vector<double> betas(m);
    for (int i = 0; i < m; ++i) betas[i] = sde.beta(x0, sde.marks.atoms[i].e);
    for (int probe = -4; probe <= 4; ++probe) {
        const double x = x0 + 0.5 * probe;
        if (std::abs(sde.b(x) - bc) > 1e-12 ||
            std::abs(sde.sigma(x) - sc) > 1e-12)
            return false;
        for (int i = 0; i < m; ++i)
            if (std::abs(sde.beta(x, sde.marks.atoms[i].e) - betas[i]) > 1e-12)
                return false;
    }
    return true;
}

void shift_driver(PideDriver& f, double bump) {
    if (bump == 0.0) return;
    if (f.form == "zero") {
        f.form = "linear";
        f.a = f.b = f.d = 0.0;
        f.c = bump;
    } else {
        f.c += bump;
    }
}

} // namespace

double PideSolution::interp(int level, double x) const {
    const InterpWeights w = locate(grid, x);
    return w.w0 * at(level, w.j0) + w.w1 * at(level, w.j0 + 1);
}

double cfl_time_step(const PideProblem& prob, const FdGrid& grid) {
    const double dx = grid.dx();
    double sig2 = 0.0, drift = 0.0;
    for (int j = 0; j < grid.points; ++j) {
        const double x = grid.x(j);
        const double s = prob.sde.sigma(x);
        sig2 = std::max(sig2, s * s);
        drift = std::max(drift, std::abs(effective_drift(prob.sde, x)));
    }
    const double denom = sig2 / (dx * dx) + drift / dx +
                         prob.sde.marks.total_mass() +
                         driver_jump_drain(prob, grid);
    if (denom == 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / denom;
}

PideSolution solve_pidvi(const PideProblem& prob, const FdGrid& grid) {
    const int P = grid.points;
    const int L = grid.steps;
    if (P < 3 || L < 1) throw ConfigError("grid needs >= 3 points and >= 1 step");
    const double dx = grid.dx();
    const double dt = grid.dt(prob.horizon);
    if (dt > cfl_time_step(prob, grid) * (1.0 + 1e-12))
        throw CflViolated("time step exceeds the stable explicit step");

    const bool linear = prob.f.form == "linear";
    if (!linear && prob.f.form != "zero")
        throw ConfigError("unknown grid driver form: " + prob.f.form);
    if (linear && prob.f.d < 0.0)
        throw ConfigError("jump weight d must be nonnegative");
    if (linear && prob.f.b != 0.0)
        for (int j = 0; j < P; ++j)
            if (prob.sde.sigma(grid.x(j)) < std::abs(prob.f.b) * dx)
                throw CflViolated(
                    "z coupling exceeds the diffusion stencil; refine dx");
    const double slope = linear ? prob.f.a : 0.0;
    if (1.0 - slope * dt <= 0.0)
        throw NonConvergence("implicit driver step 1 - a*dt is not positive");

    PideSolution sol;
    sol.grid = grid;
    sol.horizon = prob.horizon;
    sol.u.assign(static_cast<std::size_t>(L + 1) * P, 0.0);
    sol.regime.assign(sol.u.size(), Regime::Interior);

    auto cell = [&](int lvl, int j) -> std::size_t {
        return static_cast<std::size_t>(lvl) * P + j;
    };

    for (int j = 0; j < P; ++j) {
        const double x = grid.x(j);
        const double g = prob.terminal(x);
        const double lo = prob.h1(prob.horizon, x);
        const double hi = prob.h2(prob.horizon, x);
        if (g < lo - 1e-12 || g > hi + 1e-12)
            throw TerminalMismatch(
                "terminal data leaves the obstacle band at the horizon");
        sol.u[cell(L, j)] = g;
        sol.regime[cell(L, j)] = g <= lo ? Regime::LowerContact
                                 : g >= hi ? Regime::UpperContact
                                           : Regime::Interior;
    }

    std::vector<double> next(sol.u.begin() + cell(L, 0),
                             sol.u.begin() + cell(L, 0) + P);
    for (int lvl = L - 1; lvl >= 0; --lvl) {
        const double t = prob.horizon * lvl / L;
        for (int j = 0; j < P; ++j) {
            const double x = grid.x(j);
            const double sig = prob.sde.sigma(x);
            const double beff = effective_drift(prob.sde, x);

            double d2 = 0.0, zh = 0.0;
            if (j > 0 && j + 1 < P) {
                d2 = (next[j + 1] - 2.0 * next[j] + next[j - 1]) / (dx * dx);
                zh = sig * (next[j + 1] - next[j - 1]) / (2.0 * dx);
            } else {
                // linear extension: zero curvature, one-sided slope
                const double slope1 = (j == 0) ? (next[1] - next[0]) / dx
                                               : (next[j] - next[j - 1]) / dx;
                zh = sig * slope1;
            }
            double d1;
            if (j == 0) d1 = (next[1] - next[0]) / dx;
            else if (j + 1 == P) d1 = (next[j] - next[j - 1]) / dx;
            else if (beff >= 0.0) d1 = (next[j + 1] - next[j]) / dx;
            else d1 = (next[j] - next[j - 1]) / dx;

            double kmass = 0.0, r = 0.0;
            for (const auto& mk : prob.sde.marks.atoms) {
                const InterpWeights w =
                    locate(grid, x + prob.sde.beta(x, mk.e));
                const double jumped =
                    w.w0 * next[w.j0] + w.w1 * next[w.j0 + 1];
                kmass += (jumped - next[j]) * mk.nu;
                r += (jumped - next[j]) * gamma_weight(prob.f, x, mk.e) * mk.nu;
            }

            const double lu = 0.5 * sig * sig * d2 + beff * d1 + kmass;
            double cand = next[j] + dt * lu;
            if (linear)
                cand = (cand + dt * (prob.f.b * zh + prob.f.d * r + prob.f.c)) /
                       (1.0 - prob.f.a * dt);

            const double lo = prob.h1(t, x);
            const double hi = prob.h2(t, x);
            if (lo > hi)
                throw ObstacleOrderViolation(
                    "lower obstacle exceeds the upper one on the grid");
            double u;
            Regime reg;
            if (cand < lo) {
                u = lo;
                reg = Regime::LowerContact;
            } else if (cand > hi) {
                u = hi;
                reg = Regime::UpperContact;
            } else {
                u = cand;
                reg = Regime::Interior;
                const double f = eval_grid_driver(prob.f, u, zh, r);
                sol.max_interior_residual =
                    std::max(sol.max_interior_residual,
                             std::abs((u - next[j]) / dt - lu - f));
            }
            sol.u[cell(lvl, j)] = u;
            sol.regime[cell(lvl, j)] = reg;
        }
        std::copy(sol.u.begin() + cell(lvl, 0),
                  sol.u.begin() + cell(lvl, 0) + P, next.begin());
    }
    return sol;
}

Lattice build_markov_tree(const TimeGrid& grid, const SdeSpec& sde, double x0,
                          std::int64_t max_nodes) {
    if (tree_node_count(grid.steps, sde.marks.size()) > max_nodes)
        throw SizeLimit("state tree exceeds node cap");
    const BranchScheme s = calibrate_branches(grid, sde.marks);
    LatticeBuilder b(grid, sde.marks, LatticeKind::Tree);
    std::vector<double> state{ x0 };
    b.add_node(0, x0, -1);
    int begin = 0, end = 1;
    for (int lvl = 0; lvl < grid.steps; ++lvl) {
        for (int v = begin; v < end; ++v) {
            const double x = state[v];
            const double drift = effective_drift(sde, x) * grid.dt;
            const double sig = sde.sigma(x);
            for (std::size_t j = 0; j < s.p.size(); ++j) {
                double cx = x + drift + sig * s.dW[j];
                if (s.mark[j] >= 0)
                    cx += sde.beta(x, sde.marks.atoms[s.mark[j]].e);
                const int cid = b.add_node(lvl + 1, cx, v);
                state.push_back(cx);
                b.add_edge(v, cid, s.p[j], s.dW[j], s.mark[j]);
            }
        }
        begin = end;
        end = static_cast<int>(state.size());
    }
    return b.finish();
}

Lattice build_markov_recombining(const TimeGrid& grid, const SdeSpec& sde,
                                 double x0, std::int64_t max_nodes) {
    const int m = sde.marks.size();
    // Path independence of the state needs x-free coefficients.
    if (!constant_coefficients(sde, x0))
        throw ConfigError("recombining state lattice needs x-free coefficients");
    const double bc = sde.b(x0), sc = sde.sigma(x0);
    std::vector<double> betas(m);
    for (int i = 0; i < m; ++i) betas[i] = sde.beta(x0, sde.marks.atoms[i].e);

    const BranchScheme s = calibrate_branches(grid, sde.marks);
    const double a = s.dW[0];
    double drift = bc;
    for (int i = 0; i < m; ++i) drift -= betas[i] * sde.marks.atoms[i].nu;

    LatticeBuilder b(grid, sde.marks, LatticeKind::Recombining);
    using Key = std::vector<int>; // net Brownian level, then jump counts
    auto state_of = [&](const Key& k, int lvl) {
        double x = x0 + drift * grid.dt * lvl + sc * a * k[0];
        for (int i = 0; i < m; ++i) x += k[1 + i] * betas[i];
        return x;
    };
    std::map<Key, int> level_ids;
    level_ids[Key(m + 1, 0)] = b.add_node(0, x0, -1);
    std::int64_t total = 1;
    for (int lvl = 0; lvl < grid.steps; ++lvl) {
        std::map<Key, int> next_ids;
        for (const auto& [key, id] : level_ids) {
            for (std::size_t j = 0; j < s.p.size(); ++j) {
                Key ck = key;
                if (s.mark[j] < 0)
                    ck[0] += (s.dW[j] > 0) ? 1 : -1;
                else
                    ck[1 + s.mark[j]] += 1;
                auto it = next_ids.find(ck);
                int cid;
                if (it == next_ids.end()) {
                    if (++total > max_nodes)
                        throw SizeLimit("state lattice exceeds node cap");
                    cid = b.add_node(lvl + 1, state_of(ck, lvl + 1), id);
                    next_ids.emplace(ck, cid);
                } else {
                    cid = it->second;
                }
                b.add_edge(id, cid, s.p[j], s.dW[j], s.mark[j]);
            }
        }
        level_ids = std::move(next_ids);
    }
    return b.finish();
}

DriverSpec lattice_driver_for(const PideProblem& prob, const Lattice& lat) {
    if (prob.f.form == "zero") return zero_driver();
    if (prob.f.form != "linear")
        throw ConfigError("unknown grid driver form: " + prob.f.form);
    if (prob.f.d < 0.0)
        throw ConfigError("jump weight d must be nonnegative");

    const int m = lat.marks.size();
    std::vector<double> gam(m);
    for (int i = 0; i < m; ++i) {
        gam[i] = prob.f.d *
                 gamma_weight(prob.f, lat.node(0).state, lat.marks.atoms[i].e);
        if (gam[i] < 0.0)
            throw ConfigError("jump weights must be nonnegative");
    }
    // One driver serves every node only when the jump weights ignore x.
    const int n = lat.num_nodes();
    const int stride = std::max(1, n / 16);
    for (int v = 0; v < n; v += stride)
        for (int i = 0; i < m; ++i) {
            const double g = prob.f.d * gamma_weight(prob.f, lat.node(v).state,
                                                     lat.marks.atoms[i].e);
            if (std::abs(g - gam[i]) > 1e-12)
                throw ConfigError(
                    "state-dependent jump weights need per-node drivers");
        }
    return linear_driver(lat.marks, prob.f.a, gam, prob.f.c, prob.f.b);
}

CrossValidationReport crossvalidate_markovian(
    const PideProblem& prob, const FdGrid& grid, int tree_steps,
    const std::vector<std::pair<double, double>>& points,
    std::int64_t max_nodes) {
    const PideSolution fd = solve_pidvi(prob, grid);
    const double dtf = grid.dt(prob.horizon);

    const bool constant =
        constant_coefficients(prob.sde, 0.5 * (grid.xmin + grid.xmax));

    CrossValidationReport rep;
    for (const auto& [t, x] : points) {
        const int level = static_cast<int>(std::llround(t / dtf));
        if (std::abs(level * dtf - t) > 1e-9 * (1.0 + std::abs(t)) ||
            level < 0 || level >= grid.steps)
            throw ConfigError(
                "cross-validation times must sit on grid levels before T");

        const TimeGrid tg = make_time_grid(prob.horizon - t, tree_steps);
        const Lattice lat =
            constant ? build_markov_recombining(tg, prob.sde, x, max_nodes)
                     : build_markov_tree(tg, prob.sde, x, max_nodes);
        const DriverSpec drv = lattice_driver_for(prob, lat);
        const ObstaclePair obst = obstacle_on_lattice(
            lat, [&](double s, double xx) { return prob.h1(t + s, xx); },
            [&](double s, double xx) { return prob.h2(t + s, xx); },
            prob.terminal);
        const DrbsdeSolution sol = solve_drbsde_dp(lat, drv, obst);

        CrossValidationPoint cp;
        cp.t = t;
        cp.x = x;
        cp.u_fd = fd.interp(level, x);
        cp.y_tree = sol.base.y[0];
        cp.gap = std::abs(cp.u_fd - cp.y_tree);
        rep.max_gap = std::max(rep.max_gap, cp.gap);
        rep.points.push_back(cp);
    }
    return rep;
}

SchemeOrderingRecord check_discrete_comparison_principle(
    const PideProblem& prob, const FdGrid& grid,
    const std::function<double(double)>& terminal_bump, double driver_bump) {
    if (driver_bump < 0.0)
        throw ConfigError("driver bump must be nonnegative");

    SchemeOrderingRecord rec;
    const PideSolution base = solve_pidvi(prob, grid);

    PideProblem raised = prob;
    raised.terminal = [g0 = prob.terminal, bump = terminal_bump,
                       h2 = prob.h2, T = prob.horizon](double x) {
        const double lift = bump ? std::max(bump(x), 0.0) : 0.0;
        return std::min(g0(x) + lift, h2(T, x));
    };
    const PideSolution up = solve_pidvi(raised, grid);
    for (std::size_t i = 0; i < base.u.size(); ++i)
        rec.monotonicity_violation =
            std::max(rec.monotonicity_violation, base.u[i] - up.u[i]);
    rec.monotonicity_violation = std::max(rec.monotonicity_violation, 0.0);

    PideProblem sub = prob, super = prob;
    shift_driver(sub.f, -driver_bump);
    shift_driver(super.f, driver_bump);
    const PideSolution u_sub = solve_pidvi(sub, grid);
    const PideSolution u_super = solve_pidvi(super, grid);
    for (std::size_t i = 0; i < u_sub.u.size(); ++i)
        rec.ordering_violation =
            std::max(rec.ordering_violation, u_sub.u[i] - u_super.u[i]);
    rec.ordering_violation = std::max(rec.ordering_violation, 0.0);

    rec.ok = rec.monotonicity_violation <= 1e-10 &&
             rec.ordering_violation <= 1e-10;
    return rec;
}

} // namespace dynkin
