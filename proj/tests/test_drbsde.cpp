#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "dynkin/drbsde.hpp"
#include "dynkin/errors.hpp"

using namespace dynkin;

namespace {

ObstaclePair band_obstacles(const Lattice& lat, double lo, double hi,
                            double (*g)(double)) {
    return obstacle_on_lattice(
        lat, [lo](double, double) { return lo; },
        [hi](double, double) { return hi; }, [g](double x) { return g(x); });
}

} // namespace

TEST_CASE("one-step truncation clamps at the upper barrier") {
    const auto marks = make_mark_space({});
    const auto lat = build_tree(make_time_grid(0.25, 1), marks);
    NodeValues lower(lat.num_nodes()), upper(lat.num_nodes());
    lower[0] = -1.0;
    upper[0] = 0.25;
    for (int v = 1; v < lat.num_nodes(); ++v) lower[v] = upper[v] = 0.3;
    const auto obst = make_obstacles(lat, lower, upper);

    const auto sol = solve_drbsde_dp(lat, zero_driver(), obst);
    CHECK(sol.base.y[0] == 0.25);
    CHECK(sol.inc_down[0] == doctest::Approx(0.05).epsilon(1e-15));
    CHECK(sol.inc_up[0] == 0.0);
    CHECK(sol.picard_sweeps == 0);
    CHECK(check_drbsde_invariants(lat, zero_driver(), obst, sol).worst() <=
          1e-15);

    const auto w = witnesses_from_solution(lat, sol);
    CHECK(w.H[0] == 0.0);
    CHECK(w.Hp[0] == doctest::Approx(0.05).epsilon(1e-15));
    const auto w2 = mokobodski_witnesses(lat, NodeValues(lat.num_nodes(), 0.0),
                                         obst);
    CHECK(w2.Hp[0] == w.Hp[0]);
}

TEST_CASE("forced contacts propagate increments down the tree") {
    const auto marks = make_mark_space({});
    const auto lat = build_tree(make_time_grid(0.3, 3), marks);
    NodeValues lower(lat.num_nodes(), -5.0), upper(lat.num_nodes(), 5.0);
    for (int v = 0; v < lat.num_nodes(); ++v) {
        if (lat.is_terminal(v)) lower[v] = upper[v] = 0.0;
        else if (lat.node(v).level == 1) lower[v] = 0.5;
        else if (lat.node(v).level == 2) upper[v] = -0.3;
    }
    const auto obst = make_obstacles(lat, lower, upper);
    const auto sol = solve_drbsde_dp(lat, zero_driver(), obst);

    CHECK(sol.base.y[0] == 0.5);
    for (int v = 0; v < lat.num_nodes(); ++v) {
        const int lvl = lat.node(v).level;
        if (lvl == 1) {
            CHECK(sol.base.y[v] == 0.5);
            CHECK(sol.inc_up[v] == doctest::Approx(0.8).epsilon(1e-15));
            CHECK(sol.inc_down[v] == 0.0);
            CHECK(sol.cum_up[v] == 0.0);
        } else if (lvl == 2) {
            CHECK(sol.base.y[v] == -0.3);
            CHECK(sol.inc_down[v] == doctest::Approx(0.3).epsilon(1e-15));
            CHECK(sol.cum_up[v] == doctest::Approx(0.8).epsilon(1e-15));
            CHECK(sol.cum_down[v] == 0.0);
        } else if (lat.is_terminal(v)) {
            CHECK(sol.cum_up[v] == doctest::Approx(0.8).epsilon(1e-15));
            CHECK(sol.cum_down[v] == doctest::Approx(0.3).epsilon(1e-15));
        }
    }
    CHECK(check_drbsde_invariants(lat, zero_driver(), obst, sol).worst() ==
          0.0);
}

TEST_CASE("cumulative increments stay empty on merged lattices") {
    const auto marks = make_mark_space({ { 1.0, 0.5 } });
    const auto lat = build_recombining(make_time_grid(0.4, 4), marks);
    const auto obst = band_obstacles(lat, -0.4, 0.4, +[](double x) {
        return std::tanh(x) * 0.3;
    });
    const auto sol = solve_drbsde_dp(lat, zero_driver(), obst);
    CHECK(sol.cum_up.empty());
    CHECK(sol.cum_down.empty());
    CHECK(!sol.inc_up.empty());
}

TEST_CASE("Picard iteration lands on the truncation fixed point") {
    const auto marks = make_mark_space({ { -0.6, 1.5 } });
    const DriverSpec g = catalog_driver(
        "tanh_mix", { { "a", 0.8 }, { "b", -0.5 }, { "c", 0.2 } },
        { { "gamma", { 0.4 } } }, 0.0, { 0.4 });
    for (int steps : { 3, 5 }) {
        const auto lat = build_tree(make_time_grid(0.5, steps), marks);
        const auto obst = band_obstacles(lat, -0.35, 0.3, +[](double x) {
            return 0.25 * std::sin(x);
        });
        const auto dp = solve_drbsde_dp(lat, g, obst);
        const auto pic = solve_drbsde_picard(lat, g, obst);
        CHECK(pic.picard_sweeps >= 1);
        CHECK(pic.picard_sweeps <= 60);
        double gap = 0.0;
        for (int v = 0; v < lat.num_nodes(); ++v)
            gap = std::max(gap, std::abs(dp.base.y[v] - pic.base.y[v]));
        CHECK(gap <= 1e-10);
        CHECK(check_drbsde_invariants(lat, g, obst, pic).worst() <= 1e-9);
    }
}

TEST_CASE("Snell system reconstructs the value and certifies the band") {
    const auto marks = make_mark_space({ { 0.9, 1.0 } });
    const auto lat = build_tree(make_time_grid(0.4, 3), marks);
    const auto obst = band_obstacles(lat, -0.5, 0.45, +[](double x) {
        return 0.4 * std::cos(x);
    });
    NodeValues cost(lat.num_nodes());
    for (int v = 0; v < lat.num_nodes(); ++v)
        cost[v] = 0.1 * std::sin(3.0 * v) - 0.05;

    const auto pair = solve_snell_system(lat, cost, obst);
    CHECK(pair.final_gap == 0.0);
    CHECK(pair.iterations <= 4 * (lat.grid.steps + 2));

    const auto dp = solve_drbsde_dp(lat, process_driver(cost), obst);
    const auto recon = pair.reconstructed();
    for (int v = 0; v < lat.num_nodes(); ++v)
        CHECK(std::abs(recon[v] - dp.base.y[v]) <= 1e-13);

    // Witness pair: nonnegative supermartingales whose difference fills the
    // recentred band; for process drivers they coincide with (J, J').
    const auto w = mokobodski_witnesses(lat, cost, obst);
    for (int v = 0; v < lat.num_nodes(); ++v) {
        CHECK(std::abs(w.H[v] - pair.J[v]) <= 1e-12);
        CHECK(std::abs(w.Hp[v] - pair.Jp[v]) <= 1e-12);
        CHECK(w.H[v] >= 0.0);
        CHECK(w.Hp[v] >= 0.0);
        CHECK(w.H[v] - w.Hp[v] >= pair.xi_tilde[v] - 1e-12);
        CHECK(w.H[v] - w.Hp[v] <= pair.zeta_tilde[v] + 1e-12);
        if (!lat.is_terminal(v)) {
            double eh = 0.0, ehp = 0.0;
            for (const auto& e : lat.edges(v)) {
                eh += e.p * w.H[e.child];
                ehp += e.p * w.Hp[e.child];
            }
            CHECK(w.H[v] >= eh - 1e-12);
            CHECK(w.Hp[v] >= ehp - 1e-12);
        }
    }
}

TEST_CASE("plain Snell envelope dominates and is minimal at contacts") {
    const auto lat = build_tree(make_time_grid(0.2, 2), make_mark_space({}));
    NodeValues phi(lat.num_nodes());
    for (int v = 0; v < lat.num_nodes(); ++v) phi[v] = std::cos(2.0 * v);
    const auto R = snell_envelope(lat, phi);
    for (int v = 0; v < lat.num_nodes(); ++v) {
        CHECK(R[v] >= phi[v]);
        if (lat.is_terminal(v)) {
            CHECK(R[v] == phi[v]);
        } else {
            double cont = 0.0;
            for (const auto& e : lat.edges(v)) cont += e.p * R[e.child];
            CHECK(R[v] == doctest::Approx(std::max(phi[v], cont)).epsilon(1e-15));
        }
    }
}

TEST_CASE("Jordan decomposition splits signed increments minimally") {
    const std::vector<double> dalpha{ 1.0, -2.0, 3.0 };
    const auto fv = canonical_decomposition(dalpha);
    CHECK(fv.inc_up == (std::vector<double>{ 1.0, 0.0, 3.0 }));
    CHECK(fv.inc_down == (std::vector<double>{ 0.0, 2.0, 0.0 }));
}

TEST_CASE("disordered obstacles are rejected by the solver itself") {
    const auto lat = build_tree(make_time_grid(0.2, 2), make_mark_space({}));
    ObstaclePair obst;
    obst.lower.assign(lat.num_nodes(), 0.0);
    obst.upper.assign(lat.num_nodes(), 1.0);
    obst.upper[1] = -0.5; // lower > upper, bypassing make_obstacles
    for (int v = 0; v < lat.num_nodes(); ++v)
        if (lat.is_terminal(v)) obst.lower[v] = obst.upper[v] = 0.5;
    CHECK_THROWS_AS(solve_drbsde_dp(lat, zero_driver(), obst),
                    ObstacleOrderViolation);
}
