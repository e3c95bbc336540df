#include "dynkin/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "dynkin/detail/lattice_builder.hpp"

namespace dynkin {

namespace {

std::string fmt(const char* f, double a, double b = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

// Dense Cholesky of a small SPD matrix, row-major n x n.
void cholesky(std::vector<double>& g, int n) {
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = g[i * n + j];
            for (int l = 0; l < j; ++l) s -= g[i * n + l] * g[j * n + l];
            if (i == j) {
                if (s <= 0.0)
                    throw CalibrationInfeasible("projection basis is degenerate");
                g[i * n + i] = std::sqrt(s);
            } else {
                g[i * n + j] = s / g[j * n + j];
            }
        }
        for (int j = i + 1; j < n; ++j) g[i * n + j] = 0.0;
    }
}

void cholesky_solve(const std::vector<double>& l, int n, double* x) {
    for (int i = 0; i < n; ++i) {
        double s = x[i];
        for (int j = 0; j < i; ++j) s -= l[i * n + j] * x[j];
        x[i] = s / l[i * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = x[i];
        for (int j = i + 1; j < n; ++j) s -= l[j * n + i] * x[j];
        x[i] = s / l[i * n + i];
    }
}

} // namespace

TimeGrid make_time_grid(double horizon, int steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw ConfigError("time grid: horizon must be positive");
    if (steps < 1) throw ConfigError("time grid: need at least one step");
    TimeGrid g;
    g.horizon = horizon;
    g.steps = steps;
    g.dt = horizon / steps;
    return g;
}

double MarkSpace::total_mass() const {
    double s = 0.0;
    for (const auto& a : atoms) s += a.nu;
    return s;
}

double MarkSpace::inner(std::span<const double> a, std::span<const double> b) const {
    double s = 0.0;
    for (int i = 0; i < size(); ++i) s += a[i] * b[i] * atoms[i].nu;
    return s;
}

double MarkSpace::norm(std::span<const double> a) const {
    return std::sqrt(std::max(0.0, inner(a, a)));
}

MarkSpace make_mark_space(std::vector<Mark> atoms) {
    for (const auto& a : atoms) {
        if (!(a.nu > 0.0) || !std::isfinite(a.nu))
            throw ConfigError("mark space: intensities must be positive");
        if (!std::isfinite(a.e))
            throw ConfigError("mark space: mark locations must be finite");
    }
    return MarkSpace{std::move(atoms)};
}

BranchScheme calibrate_branches(const TimeGrid& grid, const MarkSpace& marks) {
    const int m = marks.size();
    const double cap = 1.0 / (m + 2);
    double jump_mass = 0.0;
    for (const auto& a : marks.atoms) {
        const double q = a.nu * grid.dt;
        if (q >= cap)
            throw CalibrationInfeasible(
                fmt("nu*dt = %.6g >= 1/(m+2) = %.6g; refine the time grid", q, cap));
        jump_mass += q;
    }
    BranchScheme s;
    const double p_brownian = (1.0 - jump_mass) / 2.0;
    const double a = std::sqrt(grid.dt / (1.0 - jump_mass));
    s.p = {p_brownian, p_brownian};
    s.dW = {a, -a};
    s.mark = {-1, -1};
    for (int i = 0; i < m; ++i) {
        s.p.push_back(marks.atoms[i].nu * grid.dt);
        s.dW.push_back(0.0);
        s.mark.push_back(i);
    }
    return s;
}

std::int64_t tree_node_count(int steps, int num_marks) {
    const std::int64_t b = num_marks + 2;
    std::int64_t total = 0, term = 1;
    for (int n = 0; n <= steps; ++n) {
        if (total > std::numeric_limits<std::int64_t>::max() - term)
            return std::numeric_limits<std::int64_t>::max();
        total += term;
        if (term > std::numeric_limits<std::int64_t>::max() / b)
            return std::numeric_limits<std::int64_t>::max();
        term *= b;
    }
    return total;
}

std::span<const Lattice::Edge> Lattice::edges(int id) const {
    return { edges_.data() + edge_begin_[id],
             static_cast<std::size_t>(edge_begin_[id + 1] - edge_begin_[id]) };
}

void Lattice::finalize() {
    const int m = marks.size();
    const int n = m + 2;
    if (num_nodes() == 0 || level_begin_.back() != num_nodes())
        throw ConfigError("lattice: malformed level index");
    if (grid.steps + 2 != static_cast<int>(level_begin_.size()))
        throw ConfigError("lattice: missing levels");
    auto first = edges(0);
    if (first.empty()) return; // single-node lattice (steps==0 is rejected earlier)
    // Shared branch template across non-terminal nodes; verified in debug
    // by check_moments in tests.  Build the projection normal matrix once.
    proj_basis_.assign(static_cast<std::size_t>(first.size()) * n, 0.0);
    std::vector<double> g(static_cast<std::size_t>(n) * n, 0.0);
    for (std::size_t j = 0; j < first.size(); ++j) {
        std::vector<double> b(n);
        b[0] = 1.0;
        b[1] = first[j].dW;
        for (int i = 0; i < m; ++i) b[2 + i] = dN_tilde(first[j], i);
        for (int r = 0; r < n; ++r) {
            proj_basis_[j * n + r] = b[r] * first[j].p;
            for (int cidx = 0; cidx < n; ++cidx)
                g[r * n + cidx] += first[j].p * b[r] * b[cidx];
        }
    }
    cholesky(g, n);
    proj_chol_ = std::move(g);
}

void Lattice::project_into(int id, std::span<const double> child_values,
                           double& mean, double& z, std::span<double> k_out,
                           double& residual) const {
    const int m = marks.size();
    const int n = m + 2;
    auto es = edges(id);
    // rhs_r = sum_j p_j basis_r(j) y_j ; proj_basis_ already carries p_j.
    double coef[16]; // m <= 14 is far beyond anything built here
    for (int r = 0; r < n; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < es.size(); ++j)
            s += proj_basis_[j * n + r] * child_values[j];
        coef[r] = s;
    }
    cholesky_solve(proj_chol_, n, coef);
    // Residual by re-substitution: the identity |y - Bc|^2 = |y|^2 - <c, rhs>
    // cancels catastrophically near an exact fit, which is the common case.
    double sse = 0.0;
    for (std::size_t j = 0; j < es.size(); ++j) {
        double fit = coef[0] + coef[1] * es[j].dW;
        for (int i = 0; i < m; ++i) fit += coef[2 + i] * dN_tilde(es[j], i);
        const double d = child_values[j] - fit;
        sse += es[j].p * d * d;
    }
    mean = coef[0];
    z = coef[1];
    for (int i = 0; i < m; ++i) k_out[i] = coef[2 + i];
    residual = std::sqrt(sse);
}

Projection Lattice::project(int id, std::span<const double> child_values) const {
    Projection p;
    p.k.resize(marks.size());
    project_into(id, child_values, p.mean, p.z, p.k, p.residual);
    return p;
}

void Lattice::gather_children(int id, const NodeValues& v,
                              std::vector<double>& out) const {
    auto es = edges(id);
    out.resize(es.size());
    for (std::size_t j = 0; j < es.size(); ++j) out[j] = v[es[j].child];
}

Lattice build_tree(const TimeGrid& grid, const MarkSpace& marks,
                   std::int64_t max_nodes) {
    const std::int64_t total = tree_node_count(grid.steps, marks.size());
    if (total > max_nodes)
        throw SizeLimit(fmt("tree would need %.0f nodes (cap %.0f)",
                            static_cast<double>(total),
                            static_cast<double>(max_nodes)));
    const BranchScheme s = calibrate_branches(grid, marks);
    LatticeBuilder b(grid, marks, LatticeKind::Tree);
    std::vector<double> state{0.0};
    b.add_node(0, 0.0, -1);
    int level_first = 0, level_count = 1;
    for (int lvl = 0; lvl < grid.steps; ++lvl) {
        int next_first = level_first + level_count;
        int id = level_first;
        for (int u = 0; u < level_count; ++u, ++id) {
            for (std::size_t j = 0; j < s.p.size(); ++j) {
                // Node state accumulates the raw noise path W + sum e dN.
                const double jump = s.mark[j] >= 0 ? marks.atoms[s.mark[j]].e : 0.0;
                const double cs = state[id] + s.dW[j] + jump;
                int c = b.add_node(lvl + 1, cs, id);
                state.push_back(cs);
                b.add_edge(id, c, s.p[j], s.dW[j], s.mark[j]);
            }
        }
        level_first = next_first;
        level_count *= static_cast<int>(s.p.size());
    }
    return b.finish();
}

Lattice build_recombining(const TimeGrid& grid, const MarkSpace& marks,
                          std::int64_t max_nodes) {
    const BranchScheme s = calibrate_branches(grid, marks);
    const int m = marks.size();
    const double a = s.dW[0];
    LatticeBuilder b(grid, marks, LatticeKind::Recombining);
    // Key: (net Brownian level, jump count per mark).
    using Key = std::vector<int>;
    std::map<Key, int> level_ids;
    Key root(m + 1, 0);
    auto state_of = [&](const Key& k) {
        double x = k[0] * a;
        for (int i = 0; i < m; ++i) x += k[1 + i] * marks.atoms[i].e;
        return x;
    };
    level_ids[root] = b.add_node(0, 0.0, -1);
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
                        throw SizeLimit("recombining lattice exceeds node cap");
                    cid = b.add_node(lvl + 1, state_of(ck), id);
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

ObstaclePair make_obstacles(const Lattice& lat, NodeValues lower,
                            NodeValues upper) {
    const int n = lat.num_nodes();
    if (static_cast<int>(lower.size()) != n || static_cast<int>(upper.size()) != n)
        throw ConfigError("obstacles: size mismatch with lattice");
    for (int v = 0; v < n; ++v) {
        if (!(lower[v] <= upper[v]))
            throw ObstacleOrderViolation(
                fmt("lower > upper at a node (%.17g > %.17g)", lower[v], upper[v]));
        if (lat.is_terminal(v) && lower[v] != upper[v])
            throw TerminalMismatch("barriers must coincide at terminal nodes");
    }
    return ObstaclePair{std::move(lower), std::move(upper)};
}

ObstaclePair obstacle_on_lattice(const Lattice& lat,
                                 const std::function<double(double, double)>& h1,
                                 const std::function<double(double, double)>& h2,
                                 const std::function<double(double)>& g) {
    const int n = lat.num_nodes();
    NodeValues lo(n), hi(n);
    for (int v = 0; v < n; ++v) {
        const double t = lat.grid.time(lat.node(v).level);
        const double x = lat.node(v).state;
        if (lat.is_terminal(v)) {
            const double gv = g(x);
            if (!(h1(t, x) <= gv) || !(gv <= h2(t, x)))
                throw TerminalMismatch(
                    "terminal value must lie between the barriers at T");
            lo[v] = hi[v] = gv;
        } else {
            lo[v] = h1(t, x);
            hi[v] = h2(t, x);
        }
    }
    return make_obstacles(lat, std::move(lo), std::move(hi));
}

double MomentReport::worst() const {
    return std::max({prob_sum, mean_dW, var_dW, mean_dN, cross});
}

MomentReport check_moments(const Lattice& lat, int node) {
    MomentReport r;
    auto es = lat.edges(node);
    const int m = lat.marks.size();
    double ps = 0.0, mw = 0.0, vw = 0.0;
    for (const auto& e : es) {
        ps += e.p;
        mw += e.p * e.dW;
        vw += e.p * e.dW * e.dW;
    }
    r.prob_sum = std::abs(ps - 1.0);
    r.mean_dW = std::abs(mw);
    r.var_dW = std::abs(vw - lat.grid.dt);
    for (int i = 0; i < m; ++i) {
        double mn = 0.0, cx = 0.0;
        for (const auto& e : es) {
            const double dn = (e.mark == i) ? 1.0 : 0.0;
            mn += e.p * dn;
            cx += e.p * e.dW * dn;
        }
        r.mean_dN = std::max(r.mean_dN,
                             std::abs(mn - lat.marks.atoms[i].nu * lat.grid.dt));
        r.cross = std::max(r.cross, std::abs(cx));
    }
    return r;
}

bool is_predictable(const Lattice& lat, const NodeValues& v, double tol) {
    for (int id = 0; id < lat.num_nodes(); ++id) {
        auto es = lat.edges(id);
        for (std::size_t j = 1; j < es.size(); ++j)
            if (std::abs(v[es[j].child] - v[es[0].child]) > tol) return false;
    }
    return true;
}

} // namespace dynkin
