#pragma once

// Finite-difference solver for the two-obstacle partial integro-differential
// variational inequality satisfied by u(t,x) = Y_t^{t,x} in the Markovian
// case, and the tree-vs-grid cross-validation.

#include <functional>
#include <vector>

#include "dynkin/drbsde.hpp"

namespace dynkin {

// Forward dynamics dX = b dt + sigma dW + integral of beta dN~; jumps act
// through the same finite mark set as the lattices.
struct SdeSpec {
    std::function<double(double)> b;
    std::function<double(double)> sigma;
    std::function<double(double, double)> beta; // beta(x, e)
    MarkSpace marks;
};

// Driver of the PIDVI: f(t, x, y, z, r) where r stands for the jump
// functional B u = integral (u(x+beta)-u(x)) gamma(x,e) nu(de); gamma must be
// nonnegative so f is nondecreasing in r.
struct PideDriver {
    // forms: "zero" | "linear": a*y + b*z + d*r + c with d >= 0
    std::string form = "zero";
    double a = 0.0, b = 0.0, d = 0.0, c = 0.0;
    std::function<double(double, double)> gamma; // gamma(x,e), default 1
    double lipschitz_C = 0.0;
};

struct PideProblem {
    SdeSpec sde;
    PideDriver f;
    std::function<double(double, double)> h1; // lower obstacle h1(t,x)
    std::function<double(double, double)> h2; // upper obstacle
    std::function<double(double)> terminal;   // g(x), h1 <= g <= h2 at T
    double horizon = 1.0;
};

struct FdGrid {
    double xmin = -1.0;
    double xmax = 1.0;
    int points = 101; // grid nodes including both ends
    int steps = 100;  // time levels
    double dx() const { return (xmax - xmin) / (points - 1); }
    double dt(double horizon) const { return horizon / steps; }
    double x(int j) const { return xmin + j * dx(); }
};

enum class Regime : std::uint8_t { Interior = 0, LowerContact = 1, UpperContact = 2 };

struct PideSolution {
    FdGrid grid;
    double horizon = 1.0;
    std::vector<double> u;       // (steps+1) x points, row-major by time level
    std::vector<Regime> regime;  // same layout
    double max_interior_residual = 0.0; // |H u| over interior-regime cells

    double at(int level, int j) const {
        return u[static_cast<std::size_t>(level) * grid.points + j];
    }
    Regime regime_at(int level, int j) const {
        return regime[static_cast<std::size_t>(level) * grid.points + j];
    }
    // Linear interpolation in x at a time level.
    double interp(int level, double x) const;
};

// Largest stable time step of the explicit part at this grid:
//   1 / ( sigma^2_max/dx^2 + |b_eff|_max/dx + nu(E) + driver jump drain ),
// with b_eff the jump-compensated drift and the last term d*<gamma,1>_nu for
// linear drivers (their jump functional also moves mass off the diagonal).
double cfl_time_step(const PideProblem& prob, const FdGrid& grid);

// Explicit monotone scheme, implicit only in the driver's y argument:
// central second difference, upwind first difference on the compensated
// drift, jump mass by linear interpolation clamped to the boundary cells,
// then truncation to [h1, h2].  Boundary rows extend linearly (zero second
// difference).  Throws CflViolated when dt exceeds the stable step.
PideSolution solve_pidvi(const PideProblem& prob, const FdGrid& grid);

// State lattices for X^{t0,x0}.  Branch probabilities and Brownian spacing
// come from the usual moment system; child states move by
// b dt + sigma(x) dW + beta(x,e_i) dN~.
Lattice build_markov_tree(const TimeGrid& grid, const SdeSpec& sde, double x0,
                          std::int64_t max_nodes = kDefaultMaxNodes);

// Recombining variant; requires b, sigma and beta(.,e) constant in x (checked
// by sampling), which makes node states path independent.
Lattice build_markov_recombining(const TimeGrid& grid, const SdeSpec& sde,
                                 double x0,
                                 std::int64_t max_nodes = kDefaultMaxNodes);

// Wraps the PIDE driver as a lattice driver: k enters through
// r = <k, gamma(x,.)>_nu with the node's state x.
DriverSpec lattice_driver_for(const PideProblem& prob, const Lattice& lat);

struct CrossValidationPoint {
    double t = 0.0;
    double x = 0.0;
    double u_fd = 0.0;
    double y_tree = 0.0;
    double gap = 0.0;
};

struct CrossValidationReport {
    std::vector<CrossValidationPoint> points;
    double max_gap = 0.0;
};

// Solves the PIDVI once on `grid` and, for each requested (t,x), builds the
// state lattice started there with `tree_steps` steps of the remaining
// horizon and solves the DRBSDE with obstacles/terminal sampled from the
// problem.  Recombines when the coefficients allow it, otherwise requires a
// small step count.
CrossValidationReport crossvalidate_markovian(const PideProblem& prob,
                                              const FdGrid& grid,
                                              int tree_steps,
                                              const std::vector<std::pair<double, double>>& points,
                                              std::int64_t max_nodes = 500000);

struct SchemeOrderingRecord {
    double monotonicity_violation = 0.0; // (u_base - u_raised)+ max
    double ordering_violation = 0.0;     // (U_sub - V_super)+ max
    bool ok = false;
};

// Scheme-level comparison principle: raising the terminal condition never
// lowers u anywhere; subtracting a nonnegative field from the driver yields a
// subsolution below the supersolution obtained by adding one.
SchemeOrderingRecord check_discrete_comparison_principle(
    const PideProblem& prob, const FdGrid& grid,
    const std::function<double(double)>& terminal_bump, double driver_bump);

} // namespace dynkin
