#include "dynkin/expectation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dynkin/detail/engine.hpp"

namespace dynkin {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

namespace detail {

namespace {

template <class SpecAt>
void backward_core(const Lattice& lat, SpecAt&& spec_at, double lipschitz_C,
                   const Cut& cut, const ObstaclePair* obst, BsdeSolution& out,
                   NodeValues* inc_up, NodeValues* inc_down) {
    const int n = lat.num_nodes();
    const int m = lat.marks.size();
    const double dt = lat.grid.dt;
    if (lipschitz_C * dt >= 1.0)
        throw StepContractionViolated(
            "driver Lipschitz constant times dt must stay below 1");
    if (static_cast<int>(cut.on_cut.size()) != n ||
        static_cast<int>(cut.value.size()) != n)
        throw ConfigError("cut: size mismatch with lattice");

    out.y.assign(n, kNaN);
    out.z.assign(n, 0.0);
    out.k.assign(static_cast<std::size_t>(n) * m, 0.0);
    out.proj_residual.assign(n, 0.0);
    out.defined.assign(n, 0);
    if (inc_up) inc_up->assign(n, 0.0);
    if (inc_down) inc_down->assign(n, 0.0);

    std::vector<double> child;
    std::vector<double> kbuf(m);

    for (int lvl = lat.grid.steps; lvl >= 0; --lvl) {
        const double t = lat.grid.time(lvl);
        for (int v = lat.level_begin(lvl); v < lat.level_end(lvl); ++v) {
            if (cut.on_cut[v]) {
                out.y[v] = cut.value[v];
                out.defined[v] = 1;
                continue;
            }
            if (lat.is_terminal(v)) continue; // off-cut leaf: unreachable zone
            auto es = lat.edges(v);
            bool ready = true;
            child.resize(es.size());
            for (std::size_t j = 0; j < es.size(); ++j) {
                if (!out.defined[es[j].child]) { ready = false; break; }
                child[j] = out.y[es[j].child];
            }
            if (!ready) continue; // strictly after the cut

            double mean, z, residual;
            lat.project_into(v, child, mean, z, kbuf, residual);

            const double lo = obst ? obst->lower[v] : -std::numeric_limits<double>::infinity();
            const double hi = obst ? obst->upper[v] : std::numeric_limits<double>::infinity();
            auto clamp = [&](double x) { return std::min(hi, std::max(lo, x)); };

            const DriverSpec& spec = spec_at(v);
            const auto y_slope = linear_y_coeff(spec);
            double ystar;
            if (y_slope) {
                // Affine in y: closed-form fixed point, then clamp.
                const double rest = eval_driver(spec, lat.marks, v, t, 0.0, z, kbuf);
                const double yhat = (mean + rest * dt) / (1.0 - *y_slope * dt);
                ystar = clamp(yhat);
            } else {
                ystar = clamp(mean);
                bool converged = false;
                for (int it = 0; it < kFixedPointMaxIter; ++it) {
                    const double g = eval_driver(spec, lat.marks, v, t, ystar, z, kbuf);
                    const double next = clamp(mean + g * dt);
                    const double step = std::abs(next - ystar);
                    ystar = next;
                    if (step < kFixedPointTol) { converged = true; break; }
                }
                if (!converged)
                    throw NonConvergence("implicit node fixed point did not settle");
            }

            const double g = eval_driver(spec, lat.marks, v, t, ystar, z, kbuf);
            const double candidate = mean + g * dt;
            const double y = clamp(candidate);
            if (obst) {
                (*inc_up)[v] = std::max(0.0, lo - candidate);
                (*inc_down)[v] = std::max(0.0, candidate - hi);
            }
            out.y[v] = y;
            out.z[v] = z;
            for (int i = 0; i < m; ++i)
                out.k[static_cast<std::size_t>(v) * m + i] = kbuf[i];
            out.proj_residual[v] = residual;
            out.defined[v] = 1;
        }
    }
}

} // namespace

void backward_solve(const Lattice& lat, const DriverSpec& spec, const Cut& cut,
                    const ObstaclePair* obst, BsdeSolution& out,
                    NodeValues* inc_up, NodeValues* inc_down) {
    backward_core(lat, [&](int) -> const DriverSpec& { return spec; },
                  spec.lipschitz_C, cut, obst, out, inc_up, inc_down);
}

void backward_solve(const Lattice& lat,
                    std::span<const DriverSpec* const> spec_at,
                    double lipschitz_C, const Cut& cut,
                    const ObstaclePair* obst, BsdeSolution& out,
                    NodeValues* inc_up, NodeValues* inc_down) {
    if (static_cast<int>(spec_at.size()) != lat.num_nodes())
        throw ConfigError("per-node driver list: size mismatch with lattice");
    backward_core(lat, [&](int v) -> const DriverSpec& { return *spec_at[v]; },
                  lipschitz_C, cut, obst, out, inc_up, inc_down);
}

} // namespace detail

Cut terminal_cut(const Lattice& lat, const NodeValues& terminal) {
    const int n = lat.num_nodes();
    if (static_cast<int>(terminal.size()) != n)
        throw ConfigError("terminal data: size mismatch with lattice");
    Cut c;
    c.on_cut.assign(n, 0);
    c.value.assign(n, kNaN);
    for (int v = lat.level_begin(lat.grid.steps); v < n; ++v) {
        c.on_cut[v] = 1;
        c.value[v] = terminal[v];
    }
    return c;
}

BsdeSolution solve_bsde(const Lattice& lat, const DriverSpec& spec,
                        const Cut& cut) {
    BsdeSolution out;
    detail::backward_solve(lat, spec, cut, nullptr, out, nullptr, nullptr);
    return out;
}

StoppingRule canonicalize_rule(const Lattice& lat, std::vector<int> nodes) {
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    std::vector<std::uint8_t> in_set(lat.num_nodes(), 0);
    for (int v : nodes) in_set[v] = 1;
    StoppingRule r;
    for (int v : nodes) {
        if (lat.is_terminal(v)) continue; // implicit
        bool shadowed = false;
        for (int p = lat.node(v).parent; p >= 0; p = lat.node(p).parent)
            if (in_set[p]) { shadowed = true; break; }
        if (!shadowed) r.stops.push_back(v);
    }
    return r;
}

std::int64_t count_stopping_rules(const Lattice& lat, int from) {
    if (!lat.path_unique())
        throw ConfigError("stopping-rule enumeration needs a non-recombining tree");
    const std::int64_t cap = std::numeric_limits<std::int64_t>::max();
    // Bottom-up: count(v) = 1 + prod count(child) on interior nodes.
    std::vector<std::int64_t> cnt(lat.num_nodes(), 1);
    for (int lvl = lat.grid.steps - 1; lvl >= lat.node(from).level; --lvl) {
        for (int v = lat.level_begin(lvl); v < lat.level_end(lvl); ++v) {
            std::int64_t prod = 1;
            for (const auto& e : lat.edges(v)) {
                if (cnt[e.child] != 0 && prod > cap / cnt[e.child]) { prod = cap; break; }
                prod *= cnt[e.child];
            }
            cnt[v] = (prod == cap) ? cap : prod + 1;
        }
    }
    return cnt[from];
}

namespace {

void enumerate_rec(const Lattice& lat, int v,
                   std::vector<std::vector<int>>& out) {
    // Antichains of interior nodes within subtree(v).
    out.clear();
    if (lat.is_terminal(v)) {
        out.push_back({});
        return;
    }
    std::vector<std::vector<int>> acc{{}};
    std::vector<std::vector<int>> childset;
    for (const auto& e : lat.edges(v)) {
        enumerate_rec(lat, e.child, childset);
        std::vector<std::vector<int>> merged;
        merged.reserve(acc.size() * childset.size());
        for (const auto& a : acc)
            for (const auto& b : childset) {
                std::vector<int> u = a;
                u.insert(u.end(), b.begin(), b.end());
                merged.push_back(std::move(u));
            }
        acc = std::move(merged);
    }
    out = std::move(acc);
    out.push_back({v});
}

} // namespace

std::vector<StoppingRule> enumerate_stopping_rules(const Lattice& lat, int from,
                                                   int max_interior) {
    if (!lat.path_unique())
        throw ConfigError("stopping-rule enumeration needs a non-recombining tree");
    // Count interior nodes of the subtree.
    int interior = 0;
    std::vector<int> stack{from};
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        if (lat.is_terminal(v)) continue;
        ++interior;
        for (const auto& e : lat.edges(v)) stack.push_back(e.child);
    }
    if (interior > max_interior)
        throw SizeLimit("stopping-rule enumeration: too many interior nodes");
    std::vector<std::vector<int>> sets;
    enumerate_rec(lat, from, sets);
    std::vector<StoppingRule> rules;
    rules.reserve(sets.size());
    for (auto& s : sets) {
        std::sort(s.begin(), s.end());
        rules.push_back(StoppingRule{std::move(s)});
    }
    // Deterministic order: by size then lexicographic.
    std::sort(rules.begin(), rules.end(), [](const auto& a, const auto& b) {
        if (a.stops.size() != b.stops.size()) return a.stops.size() < b.stops.size();
        return a.stops < b.stops;
    });
    return rules;
}

Cut game_cut(const Lattice& lat, const StoppingRule& tau,
             const StoppingRule& sigma, const ObstaclePair& obst) {
    const int n = lat.num_nodes();
    std::vector<std::uint8_t> in_tau(n, 0), in_sigma(n, 0);
    for (int v : tau.stops) in_tau[v] = 1;
    for (int v : sigma.stops) in_sigma[v] = 1;
    Cut c;
    c.on_cut.assign(n, 0);
    c.value.assign(n, kNaN);
    std::vector<int> stack{0};
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        const bool stop_tau = in_tau[v] || lat.is_terminal(v);
        const bool stop_sigma = in_sigma[v] || lat.is_terminal(v);
        if (stop_tau || stop_sigma) {
            c.on_cut[v] = 1;
            // tau pays the lower barrier when it arrives no later than sigma.
            c.value[v] = stop_tau ? obst.lower[v] : obst.upper[v];
            continue;
        }
        for (const auto& e : lat.edges(v)) stack.push_back(e.child);
    }
    return c;
}

BsdeSolution g_expectation(const Lattice& lat, const DriverSpec& spec,
                           const StoppingRule& tau, const StoppingRule& sigma,
                           const ObstaclePair& obst) {
    return solve_bsde(lat, spec, game_cut(lat, tau, sigma, obst));
}

namespace {

struct LinearStep {
    double discount = 1.0; // 1/(1 - beta dt)
    double cost = 0.0;     // c + offset
    std::vector<double> q; // child weights of the tilted measure
};

LinearStep density_step(const Lattice& lat, const DriverSpec& spec, int v) {
    const int m = lat.marks.size();
    const int n = m + 2;
    const double dt = lat.grid.dt;
    double beta = 0.0, b_z = 0.0, c = 0.0;
    std::vector<double> gamma(m, 0.0);
    switch (spec.form) {
    case DriverForm::Zero:
        break;
    case DriverForm::Process:
        c = spec.process[v];
        break;
    case DriverForm::Linear:
        beta = spec.beta;
        b_z = spec.b_z;
        c = spec.c;
        for (int i = 0; i < m; ++i) gamma[i] = spec.gamma[i];
        break;
    default:
        throw ConfigError("density evaluation is defined for linear drivers only");
    }
    if (!spec.offset.empty()) c += spec.offset[v];

    LinearStep st;
    if (std::abs(beta) * dt >= 1.0)
        throw StepContractionViolated("density evaluation: |beta| dt must stay below 1");
    st.discount = 1.0 / (1.0 - beta * dt);
    st.cost = c;

    // Weights from the exact moment system: sum q = 1, sum q dW = b_z dt,
    // sum q dN~(i) = gamma_i nu_i dt.
    auto es = lat.edges(v);
    std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0), rhs(n, 0.0);
    for (int j = 0; j < n; ++j) {
        a[0 * n + j] = 1.0;
        a[1 * n + j] = es[j].dW;
        for (int i = 0; i < m; ++i) a[(2 + i) * n + j] = lat.dN_tilde(es[j], i);
    }
    rhs[0] = 1.0;
    rhs[1] = b_z * dt;
    for (int i = 0; i < m; ++i) rhs[2 + i] = gamma[i] * lat.marks.atoms[i].nu * dt;
    // Gaussian elimination with partial pivoting on the small system.
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
        if (piv != col) {
            for (int cc = 0; cc < n; ++cc) std::swap(a[col * n + cc], a[piv * n + cc]);
            std::swap(rhs[col], rhs[piv]);
        }
        const double d = a[col * n + col];
        if (d == 0.0) throw ConfigError("density evaluation: singular moment system");
        for (int r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] / d;
            if (f == 0.0) continue;
            for (int cc = col; cc < n; ++cc) a[r * n + cc] -= f * a[col * n + cc];
            rhs[r] -= f * rhs[col];
        }
    }
    st.q.assign(n, 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double s = rhs[r];
        for (int cc = r + 1; cc < n; ++cc) s -= a[r * n + cc] * st.q[cc];
        st.q[r] = s / a[r * n + r];
    }
    return st;
}

void density_walk(const Lattice& lat,
                  const std::vector<const DriverSpec*>& spec_at, const Cut& cut,
                  int v, double w, double disc, double acc, double& total) {
    if (cut.on_cut[v]) {
        total += w * (acc + disc * cut.value[v]);
        return;
    }
    if (lat.is_terminal(v))
        throw ConfigError("density evaluation: path missed the cut");
    const LinearStep st = density_step(lat, *spec_at[v], v);
    const double d2 = disc * st.discount;
    const double acc2 = acc + d2 * st.cost * lat.grid.dt;
    auto es = lat.edges(v);
    for (std::size_t j = 0; j < es.size(); ++j)
        density_walk(lat, spec_at, cut, es[j].child, w * st.q[j], d2, acc2, total);
}

} // namespace

double linear_density_value(const Lattice& lat,
                            const std::vector<const DriverSpec*>& spec_at,
                            const Cut& cut, int from) {
    if (!lat.path_unique())
        throw ConfigError("density evaluation needs a non-recombining tree");
    double total = 0.0;
    density_walk(lat, spec_at, cut, from, 1.0, 1.0, 0.0, total);
    return total;
}

double linear_density_value(const Lattice& lat, const DriverSpec& spec,
                            const Cut& cut, int from) {
    std::vector<const DriverSpec*> at(lat.num_nodes(), &spec);
    return linear_density_value(lat, at, cut, from);
}

} // namespace dynkin
