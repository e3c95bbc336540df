#include "dynkin/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dynkin {

namespace {

// Per-step child coefficients stay nonnegative under
//   |b_z| sqrt(dt) <= 0.2,  sum_i psi_i nu_i dt <= 0.2,  sum_i nu_i dt <= 0.5,
// so the largest admissible parameter scale is the smallest of the ratios
// below (<= 1).
double regime_scale(double abs_bz, double jump_drain, double lipschitz,
                    double dt, double cap_C, bool monotone_regime) {
    double lambda = 1.0;
    auto cap = [&](double value, double limit) {
        if (value > limit) lambda = std::min(lambda, limit / value);
    };
    if (monotone_regime) {
        cap(abs_bz * std::sqrt(dt), 0.2);
        cap(jump_drain * dt, 0.2);
        cap(lipschitz * dt, 0.3);
    } else {
        cap(lipschitz * dt, 0.95);
    }
    cap(lipschitz, cap_C);
    return lambda;
}

DriverSpec random_driver(Rng& rng, const MarkSpace& marks, const TimeGrid& grid,
                         const InstanceOptions& opt, double cap_C) {
    const int m = marks.size();
    const double dt = grid.dt;
    const double pick = rng.uniform();

    if (pick < 0.10) return zero_driver();

    if (pick < 0.55 || !opt.allow_nonlinear || (pick < 0.70 && m == 0)) {
        double beta = rng.uniform(-1.0, 1.0);
        double b_z = rng.uniform(-1.0, 1.0);
        const double c = rng.uniform(-0.5, 0.5);
        std::vector<double> gamma(m);
        double drain = 0.0;
        for (int i = 0; i < m; ++i) {
            gamma[i] = rng.uniform(-0.9, 0.9);
            drain += std::abs(gamma[i]) * marks.atoms[i].nu;
        }
        DriverSpec draft = linear_driver(marks, beta, gamma, c, b_z);
        const double lambda = regime_scale(std::abs(b_z), drain,
                                           draft.lipschitz_C, dt, cap_C,
                                           opt.monotone_regime);
        beta *= lambda;
        b_z *= lambda;
        for (auto& g : gamma) g *= lambda;
        return linear_driver(marks, beta, gamma, c, b_z);
    }

    const double which = rng.uniform();
    if (m >= 1 && which < 0.4) { // positive part of one jump coefficient
        const int j = static_cast<int>(rng.uniform_int(0, m - 1));
        double scale = rng.uniform(0.1, 1.0);
        const double nu = marks.atoms[j].nu;
        const double lambda = regime_scale(0.0, scale, scale / std::sqrt(nu),
                                           dt, cap_C, opt.monotone_regime);
        scale *= lambda;
        std::vector<double> psi(m, 0.0);
        psi[j] = scale / nu;
        return catalog_driver("kplus",
                              { { "scale", scale },
                                { "mark", static_cast<double>(j) } },
                              {}, scale / std::sqrt(nu), psi);
    }
    if (m >= 1 && which < 0.7) { // smooth bounded jump coupling
        std::vector<double> s(m);
        double drain = 0.0;
        for (int i = 0; i < m; ++i) {
            s[i] = rng.uniform(-0.9, 0.9);
            drain += std::abs(s[i]) * marks.atoms[i].nu;
        }
        const double c = rng.uniform(-0.5, 0.5);
        const double lip = marks.norm(s);
        const double lambda =
            regime_scale(0.0, drain, lip, dt, cap_C, opt.monotone_regime);
        std::vector<double> psi(m);
        for (int i = 0; i < m; ++i) {
            s[i] *= lambda;
            psi[i] = std::abs(s[i]);
        }
        return catalog_driver("smooth_k", { { "c", c } }, { { "s", s } },
                              marks.norm(s), psi);
    }
    // saturating y coupling, nonlinear in y
    double a = rng.uniform(-1.0, 1.0);
    double b = rng.uniform(-1.0, 1.0);
    const double c = rng.uniform(-0.5, 0.5);
    std::vector<double> gamma(m);
    double drain = 0.0;
    for (int i = 0; i < m; ++i) {
        gamma[i] = rng.uniform(-0.9, 0.9);
        drain += std::abs(gamma[i]) * marks.atoms[i].nu;
    }
    const double lip0 = std::max({ std::abs(a), std::abs(b), marks.norm(gamma) });
    const double lambda =
        regime_scale(std::abs(b), drain, lip0, dt, cap_C, opt.monotone_regime);
    a *= lambda;
    b *= lambda;
    for (auto& g : gamma) g *= lambda;
    std::vector<double> psi(m);
    for (int i = 0; i < m; ++i) psi[i] = std::abs(gamma[i]);
    return catalog_driver("tanh_mix", { { "a", a }, { "b", b }, { "c", c } },
                          { { "gamma", gamma } },
                          std::max({ std::abs(a), std::abs(b),
                                     marks.norm(gamma) }),
                          psi);
}

Lattice random_lattice(Rng& rng, const InstanceOptions& opt) {
    const int steps = static_cast<int>(rng.uniform_int(1, opt.max_steps));
    const int m = static_cast<int>(rng.uniform_int(0, opt.max_marks));
    const double horizon = opt.max_horizon * rng.uniform(0.5, 1.0);
    const TimeGrid grid = make_time_grid(horizon, steps);
    std::vector<Mark> atoms;
    for (int i = 0; i < m; ++i) {
        const double e = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.5, 1.5);
        const double target = rng.uniform(0.05, std::min(0.8 / (m + 2), 0.25));
        atoms.push_back({ e, target / grid.dt });
    }
    return build_tree(grid, make_mark_space(std::move(atoms)));
}

ObstaclePair random_obstacles(Rng& rng, const Lattice& lat,
                              const InstanceOptions& opt) {
    const int n = lat.num_nodes();
    NodeValues lower(n), upper(n);
    for (int v = 0; v < n; ++v) {
        if (lat.is_terminal(v)) {
            lower[v] = upper[v] = opt.obstacle_scale * rng.uniform(-1.0, 1.0);
        } else {
            lower[v] = opt.obstacle_scale * rng.uniform(-1.0, 1.0);
            upper[v] = lower[v] + opt.gap_scale * rng.uniform(0.1, 1.0);
        }
    }
    return make_obstacles(lat, std::move(lower), std::move(upper));
}

// Pathwise running-maximum functional E[sup dxi^2 + sup dzeta^2 | node],
// exact by path enumeration.
double expected_path_sups(const Lattice& lat, const NodeValues& dxi,
                          const NodeValues& dzeta, int from) {
    double total = 0.0;
    struct Frame { int v; double p, mx, mz; };
    std::vector<Frame> stack{ { from, 1.0,
                                dxi[from] * dxi[from],
                                dzeta[from] * dzeta[from] } };
    while (!stack.empty()) {
        Frame f = stack.back();
        stack.pop_back();
        if (lat.is_terminal(f.v)) {
            total += f.p * (f.mx + f.mz);
            continue;
        }
        for (const auto& e : lat.edges(f.v)) {
            const double mx = std::max(f.mx, dxi[e.child] * dxi[e.child]);
            const double mz = std::max(f.mz, dzeta[e.child] * dzeta[e.child]);
            stack.push_back({ e.child, f.p * e.p, mx, mz });
        }
    }
    return total;
}

void validate_estimate_params(const EstimateParams& params) {
    if (params.eta <= 0.0 || params.eta > 1.0 / (params.C * params.C))
        throw ConfigError("estimate: eta must lie in (0, 1/C^2]");
    if (params.beta < 3.0 / params.eta + 2.0 * params.C)
        throw ConfigError("estimate: beta must be at least 3/eta + 2C");
}

NodeValues weighted_driver_integral(const Lattice& lat, const NodeValues& gbar,
                                    double beta) {
    const int n = lat.num_nodes();
    const double dt = lat.grid.dt;
    NodeValues integral(n, 0.0);
    for (int lvl = lat.grid.steps - 1; lvl >= 0; --lvl)
        for (int v = lat.level_begin(lvl); v < lat.level_end(lvl); ++v) {
            double mean = 0.0;
            for (const auto& e : lat.edges(v)) mean += e.p * integral[e.child];
            integral[v] = gbar[v] * gbar[v] * dt +
                          std::exp(beta * dt) * mean;
        }
    return integral;
}

EstimateRecord record_at(const Lattice& lat, const NodeValues& y1,
                         const NodeValues& y2, const NodeValues& dxi,
                         const NodeValues& dzeta, const NodeValues& integral,
                         const EstimateParams& params, int node) {
    const double t = lat.grid.time(lat.node(node).level);
    const double horizon_factor =
        std::exp(params.beta * (lat.grid.horizon - t));
    EstimateRecord rec;
    const double dy = y1[node] - y2[node];
    rec.lhs = dy * dy;
    rec.rhs = horizon_factor * expected_path_sups(lat, dxi, dzeta, node) +
              params.eta * integral[node];
    rec.slack = rec.rhs - rec.lhs;
    rec.ok = rec.lhs <= rec.rhs + 1e-12 * (1.0 + std::abs(rec.rhs));
    return rec;
}

EstimateRecord estimate_bound(const Lattice& lat, const NodeValues& y1,
                              const NodeValues& y2, const NodeValues& dxi,
                              const NodeValues& dzeta, const NodeValues& gbar,
                              const EstimateParams& params, int node) {
    validate_estimate_params(params);
    return record_at(lat, y1, y2, dxi, dzeta,
                     weighted_driver_integral(lat, gbar, params.beta), params,
                     node);
}

// Strict descendants of an antichain.
std::vector<std::uint8_t> mark_after(const Lattice& lat,
                                     const std::vector<int>& antichain) {
    std::vector<std::uint8_t> after(lat.num_nodes(), 0);
    std::vector<int> stack;
    for (int v : antichain)
        for (const auto& e : lat.edges(v)) stack.push_back(e.child);
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        if (after[v]) continue;
        after[v] = 1;
        if (!lat.is_terminal(v))
            for (const auto& e : lat.edges(v)) stack.push_back(e.child);
    }
    return after;
}

std::vector<int> first_increase_antichain(const Lattice& lat,
                                          const NodeValues& inc, double tol) {
    std::vector<int> theta;
    std::vector<int> stack{0};
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        if (lat.is_terminal(v)) continue;
        if (inc[v] > tol) {
            theta.push_back(v);
            continue;
        }
        for (const auto& e : lat.edges(v)) stack.push_back(e.child);
    }
    return theta;
}

} // namespace

Instance random_instance(Rng& rng, const InstanceOptions& opt) {
    Instance inst{ random_lattice(rng, opt), {}, {} };
    inst.driver = random_driver(rng, inst.lat.marks, inst.lat.grid, opt,
                                opt.max_lipschitz);
    inst.obst = random_obstacles(rng, inst.lat, opt);
    return inst;
}

OrderedPair random_ordered_pair(Rng& rng, const InstanceOptions& opt) {
    OrderedPair pair;
    pair.lat = std::make_shared<const Lattice>(random_lattice(rng, opt));
    const Lattice& lat = *pair.lat;
    pair.driver2 = random_driver(rng, lat.marks, lat.grid, opt,
                                 opt.max_lipschitz);
    pair.obst2 = random_obstacles(rng, lat, opt);

    pair.driver1 = pair.driver2;
    pair.driver1.offset.assign(lat.num_nodes(), 0.0);
    for (int v = 0; v < lat.num_interior(); ++v)
        pair.driver1.offset[v] = rng.uniform(0.0, 0.4);

    NodeValues lower = pair.obst2.lower, upper = pair.obst2.upper;
    for (int v = 0; v < lat.num_nodes(); ++v) {
        if (lat.is_terminal(v)) {
            const double d = rng.uniform(0.0, 0.3);
            lower[v] += d;
            upper[v] += d;
        } else {
            const double gap = upper[v] - lower[v];
            const double du = rng.uniform(0.0, 0.3);
            const double dl = rng.uniform(0.0, std::min(0.3, gap + du));
            lower[v] += dl;
            upper[v] += du;
        }
    }
    pair.obst1 = make_obstacles(lat, std::move(lower), std::move(upper));
    return pair;
}

ComparisonRecord check_comparison(const OrderedPair& pair, double tol) {
    const Lattice& lat = *pair.lat;
    const int n = lat.num_nodes();
    const int m = lat.marks.size();
    for (int v = 0; v < n; ++v)
        if (pair.obst1.lower[v] < pair.obst2.lower[v] ||
            pair.obst1.upper[v] < pair.obst2.upper[v])
            throw OrderingCertificateFalse("obstacles are not ordered");

    const DrbsdeSolution s1 = solve_drbsde_dp(lat, pair.driver1, pair.obst1);
    const DrbsdeSolution s2 = solve_drbsde_dp(lat, pair.driver2, pair.obst2);

    // The comparison argument needs g1 >= g2 along the dominated solution.
    for (int v = 0; v < lat.num_interior(); ++v) {
        const double t = lat.grid.time(lat.node(v).level);
        const auto k = s2.base.k_at(v, m);
        const double g1 = eval_driver(pair.driver1, lat.marks, v, t,
                                      s2.base.y[v], s2.base.z[v], k);
        const double g2 = eval_driver(pair.driver2, lat.marks, v, t,
                                      s2.base.y[v], s2.base.z[v], k);
        if (g1 < g2 - 1e-13 * (1.0 + std::abs(g2)))
            throw OrderingCertificateFalse("drivers are not ordered on the "
                                           "dominated solution");
    }

    ComparisonRecord rec;
    rec.ordered_inputs = true;
    for (int v = 0; v < n; ++v)
        rec.worst_violation = std::max(rec.worst_violation,
                                       s2.base.y[v] - s1.base.y[v]);
    rec.worst_violation = std::max(rec.worst_violation, 0.0);
    rec.ok = rec.worst_violation <= tol;
    return rec;
}

StrictComparisonRecord strict_comparison_case(Rng& rng,
                                              const InstanceOptions& opt) {
    for (int attempt = 0; attempt < 400; ++attempt) {
        Instance inst = random_instance(rng, opt);
        const Lattice& lat = inst.lat;
        const DrbsdeSolution s2 = solve_drbsde_dp(lat, inst.driver, inst.obst);

        const std::vector<int> theta =
            first_increase_antichain(lat, s2.inc_up, 1e-9);
        if (theta.empty()) continue;
        double min_inc = std::numeric_limits<double>::infinity();
        for (int v : theta) min_inc = std::min(min_inc, s2.inc_up[v]);
        if (min_inc < 1e-4) continue;

        // One backward step inflates a child perturbation by at most
        // (1 + (2C + sum psi_i nu_i) dt) / (1 - C dt); keep the raise small
        // enough that no pre-theta candidate can reach its lifted barrier.
        const double C = inst.driver.lipschitz_C;
        double drain = 0.0;
        for (int i = 0; i < lat.marks.size(); ++i)
            drain += (inst.driver.psi_bound.empty()
                          ? 0.0
                          : inst.driver.psi_bound[i] * lat.marks.atoms[i].nu);
        const double growth =
            std::exp((2.0 * C + drain) * lat.grid.horizon) /
            (1.0 - C * lat.grid.dt);
        const double delta = 0.4 * min_inc / std::max(growth, 1.0);

        const auto after = mark_after(lat, theta);
        NodeValues lower = inst.obst.lower, upper = inst.obst.upper;
        bool feasible = true;
        for (int v = 0; v < lat.num_nodes() && feasible; ++v) {
            if (!after[v]) continue;
            lower[v] += delta;
            if (lat.is_terminal(v)) upper[v] += delta;
            else if (lower[v] > upper[v]) feasible = false;
        }
        if (!feasible) continue;
        const ObstaclePair obst1 =
            make_obstacles(lat, std::move(lower), std::move(upper));
        const DrbsdeSolution s1 = solve_drbsde_dp(lat, inst.driver, obst1);

        StrictComparisonRecord rec;
        rec.theta_nodes = static_cast<int>(theta.size());
        double after_diff = 0.0;
        for (int v = 0; v < lat.num_nodes(); ++v) {
            const double diff = std::abs(s1.base.y[v] - s2.base.y[v]);
            if (after[v]) after_diff = std::max(after_diff, diff);
            else rec.worst_violation = std::max(rec.worst_violation, diff);
        }
        rec.solutions_differ_after = after_diff > 0.5 * delta;
        if (rec.worst_violation > 1e-10) {
            rec.status = StrictStatus::Violated;
            rec.detail = "solutions separated at or before the first increase";
        } else if (!rec.solutions_differ_after) {
            rec.status = StrictStatus::Violated;
            rec.detail = "raised barrier never bound after the first increase";
        } else {
            rec.status = StrictStatus::Ok;
        }
        return rec;
    }
    StrictComparisonRecord rec;
    rec.status = StrictStatus::HypothesisUnmet;
    rec.detail = "no instance with a solid first lower-contact was drawn";
    return rec;
}

StrictComparisonRecord check_strict_comparison(const OrderedPair& pair,
                                               int from, double tol) {
    const Lattice& lat = *pair.lat;
    StrictComparisonRecord rec;

    const MonotonicityResult m1 = check_monotonicity(pair.driver1, lat.marks);
    const MonotonicityResult m2 = check_monotonicity(pair.driver2, lat.marks);
    if (!m1.ok || !m1.strict || !m2.ok || !m2.strict) {
        rec.status = StrictStatus::HypothesisUnmet;
        rec.detail = "drivers are not strictly monotone in the jump argument";
        return rec;
    }

    const DrbsdeSolution s1 = solve_drbsde_dp(lat, pair.driver1, pair.obst1);
    const DrbsdeSolution s2 = solve_drbsde_dp(lat, pair.driver2, pair.obst2);
    if (std::abs(s1.base.y[from] - s2.base.y[from]) > tol) {
        rec.status = StrictStatus::HypothesisUnmet;
        rec.detail = "solutions do not coincide at the start node";
        return rec;
    }

    const int m = lat.marks.size();
    std::vector<int> stack{from};
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        const double diff = std::abs(s1.base.y[v] - s2.base.y[v]);
        rec.worst_violation = std::max(rec.worst_violation, diff);
        if (diff > tol) {
            rec.status = StrictStatus::Violated;
            rec.detail = "solutions separated before the first increase";
            return rec;
        }
        if (lat.is_terminal(v)) continue;

        // The claim also needs the drivers to agree along the shared solution.
        const double t = lat.grid.time(lat.node(v).level);
        const auto k = s1.base.k_at(v, m);
        const double g1 = eval_driver(pair.driver1, lat.marks, v, t,
                                      s1.base.y[v], s1.base.z[v], k);
        const double g2 = eval_driver(pair.driver2, lat.marks, v, t,
                                      s1.base.y[v], s1.base.z[v], k);
        if (std::abs(g1 - g2) > tol * (1.0 + std::abs(g1))) {
            rec.status = StrictStatus::HypothesisUnmet;
            rec.detail = "drivers differ along the common solution";
            return rec;
        }

        if (s1.inc_up[v] > tol || s1.inc_down[v] > tol ||
            s2.inc_up[v] > tol || s2.inc_down[v] > tol) {
            ++rec.theta_nodes; // an increment starts here; claim ends inclusive
            continue;
        }
        for (const auto& e : lat.edges(v)) stack.push_back(e.child);
    }
    rec.status = StrictStatus::Ok;
    return rec;
}

EstimateRecord check_apriori_estimate(const Lattice& lat, const DriverSpec& g1,
                                      const ObstaclePair& o1,
                                      const DriverSpec& g2,
                                      const ObstaclePair& o2,
                                      const NodeValues& gbar,
                                      const EstimateParams& params, int node) {
    const DrbsdeSolution s1 = solve_drbsde_dp(lat, g1, o1);
    const DrbsdeSolution s2 = solve_drbsde_dp(lat, g2, o2);
    const int n = lat.num_nodes();
    NodeValues dxi(n), dzeta(n);
    for (int v = 0; v < n; ++v) {
        dxi[v] = o1.lower[v] - o2.lower[v];
        dzeta[v] = o1.upper[v] - o2.upper[v];
    }
    return estimate_bound(lat, s1.base.y, s2.base.y, dxi, dzeta, gbar, params,
                          node);
}

EstimateRecord check_apriori_estimate_all(const Lattice& lat,
                                          const DriverSpec& g1,
                                          const ObstaclePair& o1,
                                          const DriverSpec& g2,
                                          const ObstaclePair& o2,
                                          const NodeValues& gbar,
                                          const EstimateParams& params,
                                          int* worst_node) {
    validate_estimate_params(params);
    const DrbsdeSolution s1 = solve_drbsde_dp(lat, g1, o1);
    const DrbsdeSolution s2 = solve_drbsde_dp(lat, g2, o2);
    const int n = lat.num_nodes();
    NodeValues dxi(n), dzeta(n);
    for (int v = 0; v < n; ++v) {
        dxi[v] = o1.lower[v] - o2.lower[v];
        dzeta[v] = o1.upper[v] - o2.upper[v];
    }
    const NodeValues integral =
        weighted_driver_integral(lat, gbar, params.beta);
    EstimateRecord worst;
    int arg = 0;
    for (int v = 0; v < n; ++v) {
        const EstimateRecord rec = record_at(lat, s1.base.y, s2.base.y, dxi,
                                             dzeta, integral, params, v);
        if (v == 0 || rec.slack < worst.slack) {
            worst = rec;
            arg = v;
        }
    }
    if (worst_node) *worst_node = arg;
    return worst;
}

PerturbedPair random_perturbed_pair(Rng& rng, const InstanceOptions& opt,
                                    const EstimateParams& params) {
    PerturbedPair pair;
    pair.lat = std::make_shared<const Lattice>(random_lattice(rng, opt));
    const Lattice& lat = *pair.lat;
    pair.driver1 = random_driver(rng, lat.marks, lat.grid, opt,
                                 std::min(opt.max_lipschitz, params.C));
    pair.obst1 = random_obstacles(rng, lat, opt);

    const int n = lat.num_nodes();
    pair.driver2 = pair.driver1;
    pair.driver2.offset.assign(n, 0.0);
    pair.gbar.assign(n, 0.0);
    for (int v = 0; v < lat.num_interior(); ++v) {
        pair.driver2.offset[v] = rng.uniform(-0.5, 0.5);
        pair.gbar[v] = std::abs(pair.driver2.offset[v]);
    }

    NodeValues lower = pair.obst1.lower, upper = pair.obst1.upper;
    for (int v = 0; v < n; ++v) {
        if (lat.is_terminal(v)) {
            const double d = rng.uniform(-0.3, 0.3);
            lower[v] += d;
            upper[v] += d;
        } else {
            const double gap = upper[v] - lower[v];
            const double du = rng.uniform(-0.3, 0.3);
            const double dl = rng.uniform(-0.3, std::min(0.3, gap + du));
            lower[v] += dl;
            upper[v] += du;
        }
    }
    pair.obst2 = make_obstacles(lat, std::move(lower), std::move(upper));
    return pair;
}

EstimateRecord check_zero_estimate(const Lattice& lat, const DriverSpec& g,
                                   const ObstaclePair& obst,
                                   const EstimateParams& params, int node) {
    const DrbsdeSolution s = solve_drbsde_dp(lat, g, obst);
    const int n = lat.num_nodes();
    NodeValues zero(n, 0.0), gbar(n, 0.0);
    for (int v = 0; v < lat.num_interior(); ++v) {
        const double t = lat.grid.time(lat.node(v).level);
        std::vector<double> k(lat.marks.size(), 0.0);
        gbar[v] = std::abs(eval_driver(g, lat.marks, v, t, 0.0, 0.0, k));
    }
    return estimate_bound(lat, s.base.y, zero, obst.lower, obst.upper, gbar,
                          params, node);
}

} // namespace dynkin
