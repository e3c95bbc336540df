#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "dynkin/errors.hpp"
#include "dynkin/pide.hpp"

using namespace dynkin;

namespace {

PideProblem diffusion_problem(double horizon, double lo = -10.0,
                              double hi = 10.0) {
    PideProblem p;
    p.sde.b = [](double) { return 0.0; };
    p.sde.sigma = [](double) { return 1.0; };
    p.sde.beta = [](double, double e) { return e; };
    p.sde.marks = make_mark_space({});
    p.h1 = [lo](double, double) { return lo; };
    p.h2 = [hi](double, double) { return hi; };
    p.terminal = [](double) { return 0.0; };
    p.horizon = horizon;
    return p;
}

} // namespace

TEST_CASE("one explicit step spreads a delta with the heat stencil") {
    auto prob = diffusion_problem(0.004);
    FdGrid grid;
    grid.xmin = -1.0;
    grid.xmax = 1.0;
    grid.points = 21; // dx = 0.1
    grid.steps = 1;   // dt = 0.004 -> sigma^2 dt / dx^2 = 0.4
    const int mid = 10;
    prob.terminal = [&](double x) {
        return std::abs(x - grid.x(mid)) < 0.5 * grid.dx() ? 1.0 : 0.0;
    };
    const auto sol = solve_pidvi(prob, grid);
    CHECK(sol.at(grid.steps, mid) == 1.0); // terminal row is the last level
    CHECK(sol.at(0, mid - 1) == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(sol.at(0, mid) == doctest::Approx(0.6).epsilon(1e-14));
    CHECK(sol.at(0, mid + 1) == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(sol.at(0, mid - 2) == 0.0);
}

TEST_CASE("quadratic terminal data is integrated exactly at the center") {
    auto prob = diffusion_problem(0.25, -50.0, 50.0);
    prob.terminal = [](double x) { return x * x; };
    FdGrid grid;
    grid.xmin = -6.0;
    grid.xmax = 6.0;
    grid.points = 121; // dx = 0.1
    grid.steps = 40;   // boundary error travels 1 cell per step
    const auto sol = solve_pidvi(prob, grid);
    // u(t,x) = x^2 + (T - t) for heat flow with this terminal condition.
    CHECK(sol.at(0, 60) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(sol.at(0, 70) == doctest::Approx(1.0 + 0.25).epsilon(1e-12));
    CHECK(sol.max_interior_residual <= 1e-10);
}

TEST_CASE("coincident obstacles pin the solution and label contacts") {
    auto prob = diffusion_problem(0.1);
    prob.h1 = [](double, double x) { return std::sin(x); };
    prob.h2 = prob.h1;
    prob.terminal = [](double x) { return std::sin(x); };
    FdGrid grid;
    grid.xmin = -2.0;
    grid.xmax = 2.0;
    grid.points = 41;
    grid.steps = 30;
    const auto sol = solve_pidvi(prob, grid);
    for (int j = 0; j < grid.points; ++j)
        CHECK(sol.at(0, j) ==
              doctest::Approx(std::sin(grid.x(j))).epsilon(1e-14));
    // Smoothing pulls the value off the barrier wherever sin curves: down on
    // the concave side (lower contact), up on the convex side (upper).
    CHECK(sol.regime_at(0, 30) == Regime::LowerContact); // x = 1
    CHECK(sol.regime_at(0, 10) == Regime::UpperContact); // x = -1
}

TEST_CASE("time steps beyond the stable bound are refused") {
    auto prob = diffusion_problem(1.0);
    FdGrid grid;
    grid.points = 101; // dx = 0.2 on [-10, 10]
    grid.xmin = -10.0;
    grid.xmax = 10.0;
    grid.steps = 10; // dt = 0.1 > dx^2 / sigma^2 = 0.04
    CHECK(cfl_time_step(prob, grid) < 0.1);
    CHECK_THROWS_AS(solve_pidvi(prob, grid), CflViolated);
    grid.steps = 30; // dt ~ 0.033 < 0.04 stable
    CHECK_NOTHROW(solve_pidvi(prob, grid));
}

TEST_CASE("obstacle violations on the grid are reported as such") {
    auto prob = diffusion_problem(0.5);
    // Barriers cross at interior times only; the terminal row stays valid.
    prob.h1 = [](double t, double) { return 1.0 - 4.0 * t; };
    prob.h2 = [](double, double) { return -1.0; };
    prob.terminal = [](double) { return -1.0; };
    FdGrid grid; // CFL-safe so data validation is what fires
    grid.xmin = -10.0;
    grid.xmax = 10.0;
    grid.points = 51;
    grid.steps = 200;
    CHECK_THROWS_AS(solve_pidvi(prob, grid), ObstacleOrderViolation);

    auto prob2 = diffusion_problem(0.5);
    prob2.terminal = [](double) { return 11.0; }; // outside [h1, h2]
    CHECK_THROWS_AS(solve_pidvi(prob2, grid), TerminalMismatch);
}

TEST_CASE("on-grid jumps keep a linear function a martingale") {
    // dX = beta dN~: for u(x) = x the jump integral and compensator cancel,
    // so u is invariant under the flow. beta = 0.3 is a multiple of dx.
    PideProblem prob;
    prob.sde.b = [](double) { return 0.0; };
    prob.sde.sigma = [](double) { return 0.05; };
    prob.sde.beta = [](double, double e) { return e; };
    prob.sde.marks = make_mark_space({ { 0.3, 1.0 } });
    prob.h1 = [](double, double) { return -100.0; };
    prob.h2 = [](double, double) { return 100.0; };
    prob.terminal = [](double x) { return x; };
    prob.horizon = 0.02;
    FdGrid grid;
    grid.xmin = -3.0;
    grid.xmax = 3.0;
    grid.points = 41; // dx = 0.15, 0.3 = 2 dx
    grid.steps = 10;
    const auto sol = solve_pidvi(prob, grid);
    CHECK(sol.at(0, 20) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(sol.at(0, 22) == doctest::Approx(0.3).epsilon(1e-11));
}

TEST_CASE("state trees move children by drift, noise, and jump") {
    SdeSpec sde;
    sde.b = [](double) { return 0.2; };
    sde.sigma = [](double) { return 0.5; };
    sde.beta = [](double, double e) { return e; };
    sde.marks = make_mark_space({ { 0.7, 1.0 } });
    const auto grid = make_time_grid(0.2, 2);
    const auto lat = build_markov_tree(grid, sde, 1.5);
    CHECK(lat.node(0).state == 1.5);
    const double nu_dt = 1.0 * grid.dt;
    const double a = std::sqrt(grid.dt / (1.0 - nu_dt));
    const double drift = (0.2 - 0.7 * 1.0) * grid.dt; // compensated
    const auto es = lat.edges(0);
    CHECK(lat.node(es[0].child).state ==
          doctest::Approx(1.5 + drift + 0.5 * a).epsilon(1e-15));
    CHECK(lat.node(es[1].child).state ==
          doctest::Approx(1.5 + drift - 0.5 * a).epsilon(1e-15));
    CHECK(lat.node(es[2].child).state ==
          doctest::Approx(1.5 + drift + 0.7).epsilon(1e-15));

    CHECK_NOTHROW(build_markov_recombining(grid, sde, 1.5));
    SdeSpec varying = sde;
    varying.sigma = [](double x) { return 1.0 + 0.1 * x; };
    CHECK_THROWS_AS(build_markov_recombining(grid, varying, 1.5), ConfigError);
    CHECK_NOTHROW(build_markov_tree(grid, varying, 1.5));
}

TEST_CASE("the PIDVI driver wraps into an equivalent lattice driver") {
    PideProblem prob = diffusion_problem(0.3);
    prob.sde.marks = make_mark_space({ { 0.4, 1.5 } });
    prob.f.form = "linear";
    prob.f.a = 0.3;
    prob.f.b = 0.2;
    prob.f.d = 0.5;
    prob.f.c = 0.1;
    const auto lat = build_markov_tree(make_time_grid(0.3, 2), prob.sde, 0.0);
    const DriverSpec g = lattice_driver_for(prob, lat);
    const std::vector<double> k{ 0.8 };
    // r = k * gamma * nu with gamma = 1.
    const double want = 0.3 * 0.5 + 0.2 * (-0.7) + 0.5 * (0.8 * 1.5) + 0.1;
    CHECK(eval_driver(g, lat.marks, 0, 0.0, 0.5, -0.7, k) ==
          doctest::Approx(want).epsilon(1e-14));

    PideProblem bad = prob;
    bad.f.d = -0.2; // loses monotonicity in the jump functional
    CHECK_THROWS_AS(lattice_driver_for(bad, lat), ConfigError);
}

TEST_CASE("grid and lattice values agree on a smooth no-jump problem") {
    auto prob = diffusion_problem(0.5, -10.0, 10.0);
    prob.terminal = [](double x) { return std::tanh(x); };
    prob.f.form = "linear";
    prob.f.a = 0.2;
    prob.f.c = 0.05;
    prob.f.lipschitz_C = 0.2;
    FdGrid grid;
    grid.xmin = -6.0;
    grid.xmax = 6.0;
    grid.points = 121;
    grid.steps = 200;
    const std::vector<std::pair<double, double>> pts{ { 0.0, 0.0 },
                                                      { 0.25, 0.6 } };
    const auto rep = crossvalidate_markovian(prob, grid, 24, pts);
    REQUIRE(rep.points.size() == 2);
    CHECK(rep.max_gap <= 5e-2);
    for (const auto& p : rep.points) {
        CHECK(p.gap == std::abs(p.u_fd - p.y_tree));
        CHECK(std::isfinite(p.y_tree));
    }

    // Requested times must sit on the grid's time levels.
    CHECK_THROWS_AS(
        crossvalidate_markovian(prob, grid, 8, { { 0.1234567, 0.0 } }),
        ConfigError);
}

TEST_CASE("raising data raises the scheme output") {
    auto prob = diffusion_problem(0.5);
    prob.terminal = [](double x) { return std::sin(x); };
    prob.f.form = "linear";
    prob.f.a = -0.3;
    prob.f.c = 0.1;
    prob.f.lipschitz_C = 0.3;
    FdGrid grid;
    grid.xmin = -8.0;
    grid.xmax = 8.0;
    grid.points = 81;
    grid.steps = 100;
    const auto rec = check_discrete_comparison_principle(
        prob, grid, [](double x) { return 0.2 + 0.1 * std::cos(x); }, 0.15);
    CHECK(rec.ok);
    CHECK(rec.monotonicity_violation <= 1e-10);
    CHECK(rec.ordering_violation <= 1e-10);
}
