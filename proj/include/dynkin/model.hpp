#pragma once

// Scenario lattices for a driving pair (W, N~): a one-dimensional Brownian
// motion and a compensated Poisson random measure whose intensity is carried
// by finitely many marks.  Each non-terminal node branches m+2 ways: one
// Brownian up move, one down move, and one branch per mark.  Branch data are
// calibrated so the one-step moment identities hold exactly:
//
//   sum p = 1,  E[dW] = 0,  E[dW^2] = dt,  E[dN(i)] = nu_i dt,  E[dW dN(i)] = 0.
//
// Jump branches carry dW = 0, which makes the last identity structural.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dynkin/errors.hpp"

namespace dynkin {

struct TimeGrid {
    double horizon = 1.0; // T
    int steps = 1;        // N
    double dt = 1.0;

    double time(int level) const { return horizon * level / steps; }
};

TimeGrid make_time_grid(double horizon, int steps);

struct Mark {
    double e = 0.0;  // mark location (jump size of the driving noise)
    double nu = 0.0; // intensity weight at this mark
};

// Finite atomization of the jump measure.  <a,b>_nu = sum a_i b_i nu_i.
struct MarkSpace {
    std::vector<Mark> atoms;

    int size() const { return static_cast<int>(atoms.size()); }
    double total_mass() const;
    double inner(std::span<const double> a, std::span<const double> b) const;
    double norm(std::span<const double> a) const;
};

MarkSpace make_mark_space(std::vector<Mark> atoms);

enum class LatticeKind { Tree, Recombining };

using NodeValues = std::vector<double>;

// Exact least-squares coefficients of child values on span{1, dW, dN~}.
struct Projection {
    double mean = 0.0;
    double z = 0.0;
    std::vector<double> k; // one per mark
    double residual = 0.0; // weighted L2 residual; 0 on default branch layouts
};

class Lattice {
  public:
    struct Edge {
        int child = -1;
        double p = 0.0;
        double dW = 0.0;
        int mark = -1; // -1: Brownian branch, otherwise index into marks
    };

    struct Node {
        int level = 0;
        double state = 0.0;
        int parent = -1; // unique on trees; representative on recombining lattices
    };

    TimeGrid grid;
    MarkSpace marks;
    LatticeKind kind = LatticeKind::Tree;

    int num_nodes() const { return static_cast<int>(nodes_.size()); }
    const Node& node(int id) const { return nodes_[id]; }
    bool is_terminal(int id) const { return nodes_[id].level == grid.steps; }
    std::span<const Edge> edges(int id) const;
    int branch_count() const { return marks.size() + 2; }

    // Nodes are stored level-contiguously: [level_begin(l), level_begin(l+1)).
    int level_begin(int level) const { return level_begin_[level]; }
    int level_end(int level) const { return level_begin_[level + 1]; }

    double dN_tilde(const Edge& e, int mark_index) const {
        double ind = (e.mark == mark_index) ? 1.0 : 0.0;
        return ind - marks.atoms[mark_index].nu * grid.dt;
    }

    // Exact projection of child values onto {1, dW, dN~_1..dN~_m}.
    Projection project(int id, std::span<const double> child_values) const;
    // Allocation-free variant; k_out must hold marks.size() doubles.
    void project_into(int id, std::span<const double> child_values,
                      double& mean, double& z, std::span<double> k_out,
                      double& residual) const;

    // Gathers child values of `id` from a node-indexed vector.
    void gather_children(int id, const NodeValues& v,
                         std::vector<double>& out) const;

    int num_interior() const { return level_begin_[grid.steps]; }

    // true when every root-to-leaf path is unique (cumulative processes are
    // well defined per node).
    bool path_unique() const { return kind == LatticeKind::Tree; }

    friend Lattice build_tree(const TimeGrid&, const MarkSpace&, std::int64_t);
    friend Lattice build_recombining(const TimeGrid&, const MarkSpace&,
                                     std::int64_t);
    friend class LatticeBuilder;

  private:
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::vector<int> edge_begin_; // per node; terminal nodes have no edges
    std::vector<int> level_begin_;

    // Shared branch template: every non-terminal node uses the same
    // (p, dW, mark) branch list, so the projection normal matrix is
    // factorized once.
    std::vector<double> proj_chol_;  // (m+2)x(m+2) lower Cholesky factor
    std::vector<double> proj_basis_; // per branch row: [1, dW, dN~_1..m] * p
    void finalize();
};

// Per-branch calibration shared by all builders.
struct BranchScheme {
    std::vector<double> p;
    std::vector<double> dW;
    std::vector<int> mark; // -1 for Brownian branches
};

// Solves the moment system for the default m+2 branch layout.
// Throws CalibrationInfeasible unless nu_i*dt < 1/(m+2) for every mark.
BranchScheme calibrate_branches(const TimeGrid& grid, const MarkSpace& marks);

// Number of nodes of the non-recombining tree: sum_{n<=N} (m+2)^n.
std::int64_t tree_node_count(int steps, int num_marks);

inline constexpr std::int64_t kDefaultMaxNodes = 200000;

// Non-recombining scenario tree.  Node state is the accumulated driving
// noise W + sum_i e_i N_i.
Lattice build_tree(const TimeGrid& grid, const MarkSpace& marks,
                   std::int64_t max_nodes = kDefaultMaxNodes);

// Recombining lattice keyed by (net Brownian level, jump counts); valid
// because branch increments are state independent.
Lattice build_recombining(const TimeGrid& grid, const MarkSpace& marks,
                          std::int64_t max_nodes = kDefaultMaxNodes);

// Lower/upper obstacle pair sampled on a lattice.  lower <= upper everywhere
// and the two coincide with `terminal` at terminal nodes.
struct ObstaclePair {
    NodeValues lower;
    NodeValues upper;
};

ObstaclePair make_obstacles(const Lattice& lat, NodeValues lower,
                            NodeValues upper);

// Samples h1(t,x) <= h2(t,x) along node states; terminal nodes use g(x) for
// both barriers.  Throws ObstacleOrderViolation / TerminalMismatch.
ObstaclePair obstacle_on_lattice(const Lattice& lat,
                                 const std::function<double(double, double)>& h1,
                                 const std::function<double(double, double)>& h2,
                                 const std::function<double(double)>& g);

// Moment residuals of one node's branch list; used by tests and by the
// builders' self-check.
struct MomentReport {
    double prob_sum = 0.0;   // |sum p - 1|
    double mean_dW = 0.0;    // |E dW|
    double var_dW = 0.0;     // |E dW^2 - dt|
    double mean_dN = 0.0;    // max_i |E dN(i) - nu_i dt|
    double cross = 0.0;      // max_i |E dW dN(i)|
    double worst() const;
};

MomentReport check_moments(const Lattice& lat, int node);

// Equal values across sibling groups: the defining property of processes
// whose node value is decided by the parent.
bool is_predictable(const Lattice& lat, const NodeValues& v, double tol = 0.0);

} // namespace dynkin
