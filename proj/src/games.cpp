#include "dynkin/games.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "dynkin/detail/engine.hpp"

namespace dynkin {

namespace {

struct KeyHash {
    std::size_t operator()(const std::vector<int>& v) const {
        std::size_t h = 1469598103934665603ull;
        for (int x : v) {
            h ^= static_cast<std::size_t>(static_cast<unsigned>(x));
            h *= 1099511628211ull;
        }
        return h;
    }
};

// Values of solved cuts, keyed by the labelled cut (node*2 + pays_upper).
using CutCache = std::unordered_map<std::vector<int>, double, KeyHash>;

// First hit of either stop set below `from`; pays the lower barrier when the
// tau set (or a terminal node) is reached no later than the sigma set.
void labelled_cut(const Lattice& lat, int from,
                  const std::vector<std::uint8_t>& in_tau,
                  const std::vector<std::uint8_t>& in_sigma,
                  const ObstaclePair& obst, Cut& cut, std::vector<int>& key) {
    const int n = lat.num_nodes();
    cut.on_cut.assign(n, 0);
    cut.value.assign(n, 0.0);
    key.clear();
    std::vector<int> stack{from};
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        const bool stop_tau = in_tau[v] || lat.is_terminal(v);
        const bool stop_sigma = in_sigma[v] || lat.is_terminal(v);
        if (stop_tau || stop_sigma) {
            cut.on_cut[v] = 1;
            cut.value[v] = stop_tau ? obst.lower[v] : obst.upper[v];
            key.push_back(2 * v + (stop_tau ? 0 : 1));
            continue;
        }
        for (const auto& e : lat.edges(v)) stack.push_back(e.child);
    }
}

class PairEvaluator {
  public:
    PairEvaluator(const Lattice& lat, const DriverSpec& spec,
                  const ObstaclePair& obst)
        : lat_(lat), spec_(spec), obst_(obst),
          in_tau_(lat.num_nodes(), 0), in_sigma_(lat.num_nodes(), 0) {}

    double value(int from, const StoppingRule& tau, const StoppingRule& sigma) {
        for (int v : tau.stops) in_tau_[v] = 1;
        for (int v : sigma.stops) in_sigma_[v] = 1;
        labelled_cut(lat_, from, in_tau_, in_sigma_, obst_, cut_, key_);
        for (int v : tau.stops) in_tau_[v] = 0;
        for (int v : sigma.stops) in_sigma_[v] = 0;
        auto it = cache_.find(key_);
        if (it != cache_.end()) return it->second;
        detail::backward_solve(lat_, spec_, cut_, nullptr, scratch_, nullptr,
                               nullptr);
        const double y = scratch_.y[from];
        cache_.emplace(key_, y);
        return y;
    }

    std::int64_t solves() const { return static_cast<std::int64_t>(cache_.size()); }

  private:
    const Lattice& lat_;
    const DriverSpec& spec_;
    const ObstaclePair& obst_;
    std::vector<std::uint8_t> in_tau_, in_sigma_;
    Cut cut_;
    std::vector<int> key_;
    BsdeSolution scratch_;
    CutCache cache_;
};

void require_tree(const Lattice& lat) {
    if (!lat.path_unique())
        throw ConfigError("game enumeration needs a non-recombining tree");
}

void gate_monotone(const DriverSpec& spec, const MarkSpace& marks, bool force) {
    if (force) return;
    const MonotonicityResult r = check_monotonicity(spec, marks);
    if (!r.ok)
        throw MonotonicityViolated(
            r.detail.empty() ? "driver failed the jump-monotonicity check"
                             : r.detail);
}

template <class Pred>
StoppingRule first_hit(const Lattice& lat, int from, Pred&& pred) {
    StoppingRule r;
    std::vector<int> stack{from};
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        if (lat.is_terminal(v)) continue;
        if (pred(v)) {
            r.stops.push_back(v);
            continue;
        }
        for (const auto& e : lat.edges(v)) stack.push_back(e.child);
    }
    std::sort(r.stops.begin(), r.stops.end());
    return r;
}

void fill_cumulative(const Lattice& lat, DrbsdeSolution& sol) {
    if (!lat.path_unique()) return;
    const int n = lat.num_nodes();
    sol.cum_up.assign(n, 0.0);
    sol.cum_down.assign(n, 0.0);
    for (int v = 1; v < n; ++v) {
        const int p = lat.node(v).parent;
        sol.cum_up[v] = sol.cum_up[p] + sol.inc_up[p];
        sol.cum_down[v] = sol.cum_down[p] + sol.inc_down[p];
    }
}

} // namespace

GameReport game_values_bruteforce(const Lattice& lat, const DriverSpec& spec,
                                  const ObstaclePair& obst,
                                  const GameCaps& caps, bool force) {
    require_tree(lat);
    gate_monotone(spec, lat.marks, force);
    if (lat.num_interior() > caps.max_interior)
        throw SizeLimit("game enumeration: too many interior nodes");

    const int n = lat.num_nodes();
    std::int64_t total_pairs = 0;
    for (int v = 0; v < lat.num_interior(); ++v) {
        const std::int64_t r = count_stopping_rules(lat, v);
        if (r > caps.max_rule_pairs ||
            total_pairs > caps.max_rule_pairs - r * r)
            throw SizeLimit("game enumeration: rule-pair budget exceeded");
        total_pairs += r * r;
    }

    GameReport rep;
    rep.rules = count_stopping_rules(lat, 0);
    rep.y = solve_drbsde_dp(lat, spec, obst).base.y;
    rep.upper.assign(n, 0.0);
    rep.lower.assign(n, 0.0);
    for (int v = lat.level_begin(lat.grid.steps); v < n; ++v)
        rep.upper[v] = rep.lower[v] = obst.lower[v];

    PairEvaluator eval(lat, spec, obst);
    for (int s = 0; s < lat.num_interior(); ++s) {
        const auto rules = enumerate_stopping_rules(lat, s, caps.max_interior);
        const int r = static_cast<int>(rules.size());
        std::vector<double> umax(r, -std::numeric_limits<double>::infinity());
        std::vector<double> lmin(r, std::numeric_limits<double>::infinity());
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) {
                const double v = eval.value(s, rules[i], rules[j]);
                umax[j] = std::max(umax[j], v);
                lmin[i] = std::min(lmin[i], v);
                ++rep.pairs;
            }
        rep.upper[s] = *std::min_element(umax.begin(), umax.end());
        rep.lower[s] = *std::max_element(lmin.begin(), lmin.end());
    }

    for (int v = 0; v < n; ++v) {
        rep.value_gap = std::max(rep.value_gap,
                                 std::abs(rep.upper[v] - rep.lower[v]));
        rep.drbsde_gap = std::max(rep.drbsde_gap,
                                  std::abs(rep.upper[v] - rep.y[v]));
    }
    rep.value_exists = rep.value_gap <= kSaddleSlack;
    return rep;
}

SaddleReport extract_saddle(const Lattice& lat, const DriverSpec& spec,
                            const ObstaclePair& obst, const DrbsdeSolution& sol,
                            int from, double eps, const GameCaps& caps) {
    require_tree(lat);
    const NodeValues& y = sol.base.y;

    double scale = 1.0;
    for (int v = 0; v < lat.num_nodes(); ++v)
        if (sol.base.defined[v]) scale = std::max(scale, std::abs(y[v]));
    const double ctol = kContactTol * scale;

    SaddleReport rep;
    rep.y_at_start = y[from];
    rep.tau_star = first_hit(lat, from,
                             [&](int v) { return y[v] <= obst.lower[v] + ctol; });
    rep.sigma_star = first_hit(lat, from,
                               [&](int v) { return y[v] >= obst.upper[v] - ctol; });

    const auto rules = enumerate_stopping_rules(lat, from, caps.max_interior);
    if (4 * static_cast<std::int64_t>(rules.size()) > caps.max_rule_pairs)
        throw SizeLimit("saddle check: rule budget exceeded");

    PairEvaluator eval(lat, spec, obst);
    rep.value = eval.value(from, rep.tau_star, rep.sigma_star);

    rep.worst_violation = 0.0;
    for (const auto& rule : rules) {
        // tau deviations may not gain against sigma*; sigma deviations may
        // not cut the value under tau*.
        const double up = eval.value(from, rule, rep.sigma_star);
        const double dn = eval.value(from, rep.tau_star, rule);
        rep.worst_violation = std::max({ rep.worst_violation,
                                         up - rep.value, rep.value - dn });
        rep.deviations += 2;
    }
    rep.verified = rep.worst_violation <= kSaddleSlack;

    const double C = spec.lipschitz_C;
    const double T = lat.grid.horizon;
    rep.K = std::exp(C * T) * (1.0 + C * T);
    rep.eps = eps;
    if (eps > 0.0) {
        rep.tau_eps = first_hit(lat, from,
                                [&](int v) { return y[v] <= obst.lower[v] + eps; });
        rep.sigma_eps = first_hit(lat, from,
                                  [&](int v) { return y[v] >= obst.upper[v] - eps; });
        rep.eps_worst_loss = 0.0;
        for (const auto& rule : rules) {
            const double up = eval.value(from, rule, rep.sigma_eps);
            const double dn = eval.value(from, rep.tau_eps, rule);
            rep.eps_worst_loss = std::max({ rep.eps_worst_loss,
                                            up - rep.y_at_start,
                                            rep.y_at_start - dn });
            rep.deviations += 2;
        }
        rep.eps_verified = rep.eps_worst_loss <= rep.K * eps + kSaddleSlack;
    }
    return rep;
}

MixedGameReport solve_mixed_game(const Lattice& lat, const MixedGameSpec& spec,
                                 const ObstaclePair& obst, const GameCaps& caps,
                                 bool force, double eps) {
    const DriverSpec driver = supinf_driver(spec.n_u, spec.n_v, spec.family);
    gate_monotone(driver, lat.marks, force);

    MixedGameReport rep;
    rep.sol = solve_drbsde_dp(lat, driver, obst);

    const int n = lat.num_nodes();
    const int m = lat.marks.size();
    rep.u_star.assign(n, 0);
    rep.v_star.assign(n, 0);
    rep.isaacs_violation = 0.0;
    std::vector<double> mat(static_cast<std::size_t>(spec.n_u) * spec.n_v);
    for (int v = 0; v < lat.num_interior(); ++v) {
        const double t = lat.grid.time(lat.node(v).level);
        const auto k = rep.sol.base.k_at(v, m);
        for (int u = 0; u < spec.n_u; ++u)
            for (int w = 0; w < spec.n_v; ++w)
                mat[u * spec.n_v + w] =
                    eval_driver(spec.member(u, w), lat.marks, v, t,
                                rep.sol.base.y[v], rep.sol.base.z[v], k);
        double maxmin = -std::numeric_limits<double>::infinity();
        int ustar = 0;
        for (int u = 0; u < spec.n_u; ++u) {
            double worst = std::numeric_limits<double>::infinity();
            for (int w = 0; w < spec.n_v; ++w)
                worst = std::min(worst, mat[u * spec.n_v + w]);
            if (worst > maxmin) { maxmin = worst; ustar = u; }
        }
        double minmax = std::numeric_limits<double>::infinity();
        for (int w = 0; w < spec.n_v; ++w) {
            double best = -std::numeric_limits<double>::infinity();
            for (int u = 0; u < spec.n_u; ++u)
                best = std::max(best, mat[u * spec.n_v + w]);
            minmax = std::min(minmax, best);
        }
        int vstar = 0;
        double row_min = std::numeric_limits<double>::infinity();
        for (int w = 0; w < spec.n_v; ++w)
            if (mat[ustar * spec.n_v + w] < row_min) {
                row_min = mat[ustar * spec.n_v + w];
                vstar = w;
            }
        rep.u_star[v] = ustar;
        rep.v_star[v] = vstar;
        rep.isaacs_violation = std::max(rep.isaacs_violation,
                                        std::max(0.0, minmax - maxmin));
    }
    rep.isaacs_ok = rep.isaacs_violation <= 1e-10;
    if (lat.path_unique())
        rep.saddle = extract_saddle(lat, driver, obst, rep.sol, 0, eps, caps);
    return rep;
}

DrbsdeSolution solve_controlled(const Lattice& lat, const MixedGameSpec& spec,
                                const ObstaclePair& obst,
                                const std::vector<int>& u_process,
                                const std::vector<int>& v_process) {
    const int n = lat.num_nodes();
    if (static_cast<int>(u_process.size()) != n ||
        static_cast<int>(v_process.size()) != n)
        throw ConfigError("control processes: size mismatch with lattice");
    double lip = 0.0;
    for (const auto& f : spec.family) lip = std::max(lip, f.lipschitz_C);
    std::vector<const DriverSpec*> spec_at(n);
    for (int v = 0; v < n; ++v)
        spec_at[v] = &spec.member(u_process[v], v_process[v]);

    const Cut cut = terminal_cut(lat, obst.lower);
    DrbsdeSolution out;
    detail::backward_solve(lat, spec_at, lip, cut, &obst, out.base,
                           &out.inc_up, &out.inc_down);
    fill_cumulative(lat, out);
    return out;
}

MixedBruteForce mixed_game_bruteforce(const Lattice& lat,
                                      const MixedGameSpec& spec,
                                      const ObstaclePair& obst, int from,
                                      std::int64_t max_evals) {
    require_tree(lat);
    const int n = lat.num_nodes();

    std::vector<int> interior; // of the subtree rooted at `from`
    {
        std::vector<int> stack{from};
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            if (lat.is_terminal(v)) continue;
            interior.push_back(v);
            for (const auto& e : lat.edges(v)) stack.push_back(e.child);
        }
        std::sort(interior.begin(), interior.end());
    }
    const int kslots = static_cast<int>(interior.size());

    const auto rules = enumerate_stopping_rules(lat, from);
    const std::int64_t nrules = static_cast<std::int64_t>(rules.size());

    std::int64_t maps_u = 1, maps_v = 1;
    for (int i = 0; i < kslots; ++i) {
        maps_u *= spec.n_u;
        maps_v *= spec.n_v;
        if (maps_u > max_evals || maps_v > max_evals)
            throw SizeLimit("mixed brute force: control-map budget exceeded");
    }
    const std::int64_t rows = maps_u * nrules;
    const std::int64_t cols = maps_v * nrules;
    if (rows > max_evals / cols)
        throw SizeLimit("mixed brute force: evaluation budget exceeded");

    double lip = 0.0;
    for (const auto& f : spec.family) lip = std::max(lip, f.lipschitz_C);

    std::vector<int> u_at(n, 0), v_at(n, 0);
    std::vector<const DriverSpec*> spec_at(n, &spec.member(0, 0));
    std::vector<std::uint8_t> in_tau(n, 0), in_sigma(n, 0);
    Cut cut;
    std::vector<int> key;
    BsdeSolution scratch;

    std::vector<double> val(static_cast<std::size_t>(rows) * cols);
    MixedBruteForce out;
    for (std::int64_t a = 0; a < maps_u; ++a) {
        std::int64_t ra = a;
        for (int i = 0; i < kslots; ++i) {
            u_at[interior[i]] = static_cast<int>(ra % spec.n_u);
            ra /= spec.n_u;
        }
        for (std::int64_t b = 0; b < maps_v; ++b) {
            std::int64_t rb = b;
            for (int i = 0; i < kslots; ++i) {
                v_at[interior[i]] = static_cast<int>(rb % spec.n_v);
                rb /= spec.n_v;
            }
            for (int v : interior) spec_at[v] = &spec.member(u_at[v], v_at[v]);

            for (std::int64_t i = 0; i < nrules; ++i) {
                for (int s : rules[i].stops) in_tau[s] = 1;
                for (std::int64_t j = 0; j < nrules; ++j) {
                    for (int s : rules[j].stops) in_sigma[s] = 1;
                    labelled_cut(lat, from, in_tau, in_sigma, obst, cut, key);
                    detail::backward_solve(lat, spec_at, lip, cut, nullptr,
                                           scratch, nullptr, nullptr);
                    for (int s : rules[j].stops) in_sigma[s] = 0;
                    const std::int64_t row = a * nrules + i;
                    const std::int64_t col = b * nrules + j;
                    val[static_cast<std::size_t>(row) * cols + col] =
                        scratch.y[from];
                    ++out.evaluations;
                }
                for (int s : rules[i].stops) in_tau[s] = 0;
            }
        }
    }

    out.upper = std::numeric_limits<double>::infinity();
    for (std::int64_t col = 0; col < cols; ++col) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::int64_t row = 0; row < rows; ++row)
            best = std::max(best, val[static_cast<std::size_t>(row) * cols + col]);
        out.upper = std::min(out.upper, best);
    }
    out.lower = -std::numeric_limits<double>::infinity();
    for (std::int64_t row = 0; row < rows; ++row) {
        double worst = std::numeric_limits<double>::infinity();
        for (std::int64_t col = 0; col < cols; ++col)
            worst = std::min(worst, val[static_cast<std::size_t>(row) * cols + col]);
        out.lower = std::max(out.lower, worst);
    }
    return out;
}

double mixed_density_crosscheck(const Lattice& lat, const MixedGameSpec& spec,
                                const ObstaclePair& obst,
                                const std::vector<int>& u_process,
                                const std::vector<int>& v_process,
                                const GameCaps& caps) {
    require_tree(lat);
    const int n = lat.num_nodes();
    if (static_cast<int>(u_process.size()) != n ||
        static_cast<int>(v_process.size()) != n)
        throw ConfigError("control processes: size mismatch with lattice");

    std::vector<const DriverSpec*> spec_at(n);
    for (int v = 0; v < n; ++v)
        spec_at[v] = &spec.member(u_process[v], v_process[v]);
    double lip = 0.0;
    for (const auto& f : spec.family) lip = std::max(lip, f.lipschitz_C);

    const auto rules = enumerate_stopping_rules(lat, 0, caps.max_interior);
    const std::int64_t nrules = static_cast<std::int64_t>(rules.size());
    if (nrules * nrules > caps.max_rule_pairs)
        throw SizeLimit("density crosscheck: rule-pair budget exceeded");

    BsdeSolution scratch;
    double worst = 0.0;
    for (const auto& tau : rules)
        for (const auto& sigma : rules) {
            const Cut cut = game_cut(lat, tau, sigma, obst);
            detail::backward_solve(lat, spec_at, lip, cut, nullptr, scratch,
                                   nullptr, nullptr);
            const double forward = linear_density_value(lat, spec_at, cut, 0);
            worst = std::max(worst, std::abs(scratch.y[0] - forward));
        }
    return worst;
}

} // namespace dynkin
