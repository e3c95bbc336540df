#pragma once

// Driver catalog: serializable descriptions of the generators g(t,y,z,k)
// admitted by the solvers.  Every entry declares a Lipschitz constant and a
// per-mark bound psi used by the monotonicity check.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dynkin/model.hpp"

namespace dynkin {

enum class DriverForm { Zero, Process, Linear, Catalog, SupInf };

struct DriverSpec {
    DriverForm form = DriverForm::Zero;

    double lipschitz_C = 0.0;
    std::vector<double> psi_bound; // per mark; empty means unspecified

    // Linear: g = beta*y + b_z*z + <gamma, k>_nu + c.
    double beta = 0.0;
    double b_z = 0.0;
    double c = 0.0;
    std::vector<double> gamma;

    // Process: one value per node (values.size()==num_nodes).
    std::vector<double> process;

    // Catalog: id + named parameters.
    std::string id;
    std::map<std::string, double> params;
    std::map<std::string, std::vector<double>> vec_params;

    // SupInf: family indexed row-major by (u,v); g = max_u min_v family[u][v].
    int n_u = 0;
    int n_v = 0;
    std::vector<DriverSpec> family;

    // Optional additive per-node term (harness perturbations, replays).
    std::vector<double> offset;

    const DriverSpec& member(int u, int v) const { return family[u * n_v + v]; }
};

// Built-in catalog ids:
//   kplus      scale * max(k[mark], 0)
//   tanh_mix   a*tanh(y) + b*z + <gamma,k>_nu + c      (gamma in vec_params)
//   smooth_k   sum_i s_i*sin(k_i)*nu_i + c             (s in vec_params)
double eval_driver(const DriverSpec& spec, const MarkSpace& marks, int node,
                   double t, double y, double z, std::span<const double> k);

// Slope of g in y when g is affine in y with (z,k) held fixed, nullopt
// otherwise.  Enables closed-form implicit steps.
std::optional<double> linear_y_coeff(const DriverSpec& spec);

bool depends_on_node(const DriverSpec& spec);

// Convenience constructors.
DriverSpec zero_driver();
DriverSpec linear_driver(const MarkSpace& marks, double beta,
                         std::vector<double> gamma, double c, double b_z = 0.0);
DriverSpec process_driver(std::vector<double> values, double lipschitz_C = 0.0);
DriverSpec catalog_driver(std::string id, std::map<std::string, double> params,
                          std::map<std::string, std::vector<double>> vec_params,
                          double lipschitz_C,
                          std::vector<double> psi_bound = {});
DriverSpec supinf_driver(int n_u, int n_v, std::vector<DriverSpec> family);

// Declares the Lipschitz constant implied by the entry's own parameters
// (w.r.t. |y| + |z| + ||k||_nu); catalog entries use conservative closed forms.
double implied_lipschitz(const DriverSpec& spec, const MarkSpace& marks);

struct MonotonicitySample {
    double t = 0.0;
    double y = 0.0;
    double z = 0.0;
    std::vector<double> k1;
    std::vector<double> k2;
};

// Outcome of the jump-monotonicity check: existence of gamma with
// gamma_i >= -1, |gamma_i| <= psi_i and
//   g(.,k1) - g(.,k2) >= <gamma, k1-k2>_nu.
struct MonotonicityResult {
    bool ok = false;
    bool strict = false;              // all witnesses > -1
    std::vector<double> gamma;        // constant witness when the form has one
    double worst_quotient = 0.0;      // most negative per-mark quotient seen
    std::string detail;               // violation description when !ok
};

// Linear-like forms are checked analytically; other catalog entries by
// per-coordinate difference quotients on `n_samples` random points drawn
// from `seed` (plus any user samples).
MonotonicityResult check_monotonicity(const DriverSpec& spec,
                                      const MarkSpace& marks,
                                      int n_samples = 256,
                                      std::uint64_t seed = 20240901,
                                      std::span<const MonotonicitySample> extra = {});

// Central-difference gradient of g in k (for differentiable entries).
std::vector<double> numeric_gradient_k(const DriverSpec& spec,
                                       const MarkSpace& marks, double t,
                                       double y, double z,
                                       std::span<const double> k,
                                       double h = 1e-6);

// Analytic gradient in k where the catalog knows one (smooth_k, tanh_mix,
// linear); element i is the quotient gamma_i, i.e. dg/dk_i / nu_i.
std::optional<std::vector<double>> analytic_gamma(const DriverSpec& spec,
                                                  const MarkSpace& marks,
                                                  std::span<const double> k);

} // namespace dynkin
