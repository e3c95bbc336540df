#include "dynkin/driver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dynkin/rng.hpp"

namespace dynkin {

namespace {

double param(const DriverSpec& s, const std::string& key, double fallback) {
    auto it = s.params.find(key);
    return it == s.params.end() ? fallback : it->second;
}

const std::vector<double>* vparam(const DriverSpec& s, const std::string& key) {
    auto it = s.vec_params.find(key);
    return it == s.vec_params.end() ? nullptr : &it->second;
}

double eval_catalog(const DriverSpec& s, const MarkSpace& marks, double /*t*/,
                    double y, double z, std::span<const double> k) {
    if (s.id == "kplus") {
        const int mark = static_cast<int>(param(s, "mark", 0.0));
        const double scale = param(s, "scale", 1.0);
        if (mark < 0 || mark >= marks.size())
            throw ConfigError("kplus: mark index out of range");
        return scale * std::max(k[mark], 0.0);
    }
    if (s.id == "tanh_mix") {
        const double a = param(s, "a", 0.0);
        const double b = param(s, "b", 0.0);
        const double c0 = param(s, "c", 0.0);
        double v = a * std::tanh(y) + b * z + c0;
        if (const auto* g = vparam(s, "gamma"))
            for (int i = 0; i < marks.size(); ++i)
                v += (*g)[i] * k[i] * marks.atoms[i].nu;
        return v;
    }
    if (s.id == "smooth_k") {
        const double c0 = param(s, "c", 0.0);
        const auto* sv = vparam(s, "s");
        if (!sv || static_cast<int>(sv->size()) != marks.size())
            throw ConfigError("smooth_k: parameter vector s must match mark count");
        double v = c0;
        for (int i = 0; i < marks.size(); ++i)
            v += (*sv)[i] * std::sin(k[i]) * marks.atoms[i].nu;
        return v;
    }
    throw UnknownCatalogId("unknown driver catalog id: " + s.id);
}

} // namespace

double eval_driver(const DriverSpec& spec, const MarkSpace& marks, int node,
                   double t, double y, double z, std::span<const double> k) {
    double v = 0.0;
    switch (spec.form) {
    case DriverForm::Zero:
        break;
    case DriverForm::Process:
        if (node < 0) throw ConfigError("process driver evaluated without a node");
        v = spec.process[node];
        break;
    case DriverForm::Linear: {
        v = spec.beta * y + spec.b_z * z + spec.c;
        for (int i = 0; i < marks.size(); ++i)
            v += spec.gamma[i] * k[i] * marks.atoms[i].nu;
        break;
    }
    case DriverForm::Catalog:
        v = eval_catalog(spec, marks, t, y, z, k);
        break;
    case DriverForm::SupInf: {
        double best = -std::numeric_limits<double>::infinity();
        for (int u = 0; u < spec.n_u; ++u) {
            double worst = std::numeric_limits<double>::infinity();
            for (int w = 0; w < spec.n_v; ++w)
                worst = std::min(worst,
                                 eval_driver(spec.member(u, w), marks, node, t, y, z, k));
            best = std::max(best, worst);
        }
        v = best;
        break;
    }
    }
    if (!spec.offset.empty()) {
        if (node < 0) throw ConfigError("offset driver evaluated without a node");
        v += spec.offset[node];
    }
    return v;
}

std::optional<double> linear_y_coeff(const DriverSpec& spec) {
    switch (spec.form) {
    case DriverForm::Zero:
    case DriverForm::Process:
        return 0.0;
    case DriverForm::Linear:
        return spec.beta;
    case DriverForm::Catalog:
        if (spec.id == "kplus" || spec.id == "smooth_k") return 0.0;
        return std::nullopt; // tanh_mix and anything unknown
    case DriverForm::SupInf: {
        // Affine in y only if every member has the same slope.
        std::optional<double> slope;
        for (const auto& f : spec.family) {
            auto s = linear_y_coeff(f);
            if (!s) return std::nullopt;
            if (slope && *slope != *s) return std::nullopt;
            slope = s;
        }
        return slope;
    }
    }
    return std::nullopt;
}

bool depends_on_node(const DriverSpec& spec) {
    if (!spec.offset.empty() || spec.form == DriverForm::Process) return true;
    if (spec.form == DriverForm::SupInf)
        for (const auto& f : spec.family)
            if (depends_on_node(f)) return true;
    return false;
}

DriverSpec zero_driver() { return DriverSpec{}; }

DriverSpec linear_driver(const MarkSpace& marks, double beta,
                         std::vector<double> gamma, double c, double b_z) {
    DriverSpec s;
    s.form = DriverForm::Linear;
    s.beta = beta;
    s.b_z = b_z;
    s.c = c;
    s.gamma = std::move(gamma);
    s.gamma.resize(marks.size(), 0.0);
    s.lipschitz_C = implied_lipschitz(s, marks);
    s.psi_bound.assign(s.gamma.size(), 0.0);
    for (std::size_t i = 0; i < s.gamma.size(); ++i)
        s.psi_bound[i] = std::abs(s.gamma[i]);
    return s;
}

DriverSpec process_driver(std::vector<double> values, double lipschitz_C) {
    DriverSpec s;
    s.form = DriverForm::Process;
    s.process = std::move(values);
    s.lipschitz_C = lipschitz_C;
    return s;
}

DriverSpec catalog_driver(std::string id, std::map<std::string, double> params,
                          std::map<std::string, std::vector<double>> vec_params,
                          double lipschitz_C, std::vector<double> psi_bound) {
    DriverSpec s;
    s.form = DriverForm::Catalog;
    s.id = std::move(id);
    s.params = std::move(params);
    s.vec_params = std::move(vec_params);
    s.lipschitz_C = lipschitz_C;
    s.psi_bound = std::move(psi_bound);
    return s;
}

DriverSpec supinf_driver(int n_u, int n_v, std::vector<DriverSpec> family) {
    if (static_cast<int>(family.size()) != n_u * n_v)
        throw ConfigError("supinf driver: family size mismatch");
    DriverSpec s;
    s.form = DriverForm::SupInf;
    s.n_u = n_u;
    s.n_v = n_v;
    s.family = std::move(family);
    double c = 0.0;
    std::vector<double> psi;
    for (const auto& f : s.family) {
        c = std::max(c, f.lipschitz_C);
        if (psi.size() < f.psi_bound.size()) psi.resize(f.psi_bound.size(), 0.0);
        for (std::size_t i = 0; i < f.psi_bound.size(); ++i)
            psi[i] = std::max(psi[i], f.psi_bound[i]);
    }
    s.lipschitz_C = c;
    s.psi_bound = std::move(psi);
    return s;
}

double implied_lipschitz(const DriverSpec& spec, const MarkSpace& marks) {
    switch (spec.form) {
    case DriverForm::Zero:
    case DriverForm::Process:
        return 0.0;
    case DriverForm::Linear: {
        // k enters via <gamma,k>_nu <= ||gamma||_nu ||k||_nu.
        std::vector<double> g = spec.gamma;
        g.resize(marks.size(), 0.0);
        return std::max({std::abs(spec.beta), std::abs(spec.b_z),
                         marks.norm(g)});
    }
    case DriverForm::Catalog: {
        if (spec.id == "kplus") {
            const int mark = static_cast<int>(param(spec, "mark", 0.0));
            const double scale = std::abs(param(spec, "scale", 1.0));
            return scale / std::sqrt(marks.atoms[mark].nu);
        }
        if (spec.id == "tanh_mix") {
            std::vector<double> g;
            if (const auto* gv = vparam(spec, "gamma")) g = *gv;
            g.resize(marks.size(), 0.0);
            return std::max({std::abs(param(spec, "a", 0.0)),
                             std::abs(param(spec, "b", 0.0)), marks.norm(g)});
        }
        if (spec.id == "smooth_k") {
            std::vector<double> s;
            if (const auto* sv = vparam(spec, "s")) s = *sv;
            s.resize(marks.size(), 0.0);
            return marks.norm(s);
        }
        throw UnknownCatalogId("unknown driver catalog id: " + spec.id);
    }
    case DriverForm::SupInf: {
        double c = 0.0;
        for (const auto& f : spec.family)
            c = std::max(c, implied_lipschitz(f, marks));
        return c;
    }
    }
    return 0.0;
}

namespace {

// Constant witness for forms that are affine in k.
std::optional<std::vector<double>> constant_gamma(const DriverSpec& spec,
                                                  const MarkSpace& marks) {
    if (spec.form == DriverForm::Zero || spec.form == DriverForm::Process)
        return std::vector<double>(marks.size(), 0.0);
    if (spec.form == DriverForm::Linear) {
        auto g = spec.gamma;
        g.resize(marks.size(), 0.0);
        return g;
    }
    if (spec.form == DriverForm::Catalog && spec.id == "tanh_mix") {
        std::vector<double> g;
        if (const auto* gv = vparam(spec, "gamma")) g = *gv;
        g.resize(marks.size(), 0.0);
        return g;
    }
    return std::nullopt;
}

} // namespace

MonotonicityResult check_monotonicity(const DriverSpec& spec,
                                      const MarkSpace& marks, int n_samples,
                                      std::uint64_t seed,
                                      std::span<const MonotonicitySample> extra) {
    MonotonicityResult res;
    const int m = marks.size();
    std::vector<double> psi = spec.psi_bound;
    psi.resize(m, std::numeric_limits<double>::infinity());
    const double tol = 1e-10;

    auto feasible = [&](double q, int i) {
        return q >= -1.0 - tol && std::abs(q) <= psi[i] + tol;
    };

    if (auto g = constant_gamma(spec, marks)) {
        res.gamma = *g;
        res.ok = true;
        res.strict = true;
        res.worst_quotient = 0.0;
        for (int i = 0; i < m; ++i) {
            res.worst_quotient = std::min(res.worst_quotient, (*g)[i]);
            if (!feasible((*g)[i], i)) {
                res.ok = false;
                res.detail = "gamma coefficient outside [-1, psi]";
            }
            if ((*g)[i] <= -1.0 + tol) res.strict = false;
        }
        return res;
    }

    // Sampled per-coordinate difference quotients.  Walking one coordinate at
    // a time makes the telescoped inequality an identity, so feasibility of
    // every quotient is exactly the assumption on the sampled pairs.
    res.ok = true;
    res.strict = true;
    res.worst_quotient = 0.0;
    Rng rng(seed);
    std::vector<MonotonicitySample> samples(extra.begin(), extra.end());
    for (int s = 0; s < n_samples; ++s) {
        MonotonicitySample ms;
        ms.t = rng.uniform(0.0, 1.0);
        ms.y = rng.uniform(-2.0, 2.0);
        ms.z = rng.uniform(-2.0, 2.0);
        ms.k1.resize(m);
        ms.k2.resize(m);
        for (int i = 0; i < m; ++i) {
            ms.k1[i] = rng.uniform(-2.0, 2.0);
            ms.k2[i] = rng.uniform(-2.0, 2.0);
        }
        samples.push_back(std::move(ms));
    }
    std::vector<double> mixed;
    for (const auto& ms : samples) {
        mixed = ms.k2;
        double prev = eval_driver(spec, marks, -1, ms.t, ms.y, ms.z, mixed);
        for (int i = 0; i < m; ++i) {
            mixed[i] = ms.k1[i];
            const double cur = eval_driver(spec, marks, -1, ms.t, ms.y, ms.z, mixed);
            const double dk = ms.k1[i] - ms.k2[i];
            if (dk != 0.0) {
                const double q = (cur - prev) / (dk * marks.atoms[i].nu);
                res.worst_quotient = std::min(res.worst_quotient, q);
                if (!feasible(q, i)) {
                    res.ok = false;
                    res.detail = "difference quotient outside [-1, psi]";
                }
                if (q <= -1.0 + tol) res.strict = false;
            }
            prev = cur;
        }
    }
    return res;
}

std::vector<double> numeric_gradient_k(const DriverSpec& spec,
                                       const MarkSpace& marks, double t,
                                       double y, double z,
                                       std::span<const double> k, double h) {
    const int m = marks.size();
    std::vector<double> grad(m), kk(k.begin(), k.end());
    for (int i = 0; i < m; ++i) {
        kk[i] = k[i] + h;
        const double up = eval_driver(spec, marks, -1, t, y, z, kk);
        kk[i] = k[i] - h;
        const double dn = eval_driver(spec, marks, -1, t, y, z, kk);
        kk[i] = k[i];
        grad[i] = (up - dn) / (2.0 * h * marks.atoms[i].nu);
    }
    return grad;
}

std::optional<std::vector<double>> analytic_gamma(const DriverSpec& spec,
                                                  const MarkSpace& marks,
                                                  std::span<const double> k) {
    const int m = marks.size();
    if (auto g = constant_gamma(spec, marks)) return g;
    if (spec.form == DriverForm::Catalog && spec.id == "smooth_k") {
        std::vector<double> s;
        if (const auto* sv = vparam(spec, "s")) s = *sv;
        s.resize(m, 0.0);
        std::vector<double> g(m);
        for (int i = 0; i < m; ++i) g[i] = s[i] * std::cos(k[i]);
        return g;
    }
    return std::nullopt;
}

} // namespace dynkin
