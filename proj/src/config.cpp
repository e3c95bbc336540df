#include "dynkin/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace dynkin {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
}

const json& member(const json& j, const char* key, const char* where) {
    if (!j.is_object()) fail(where, "expected an object");
    const auto it = j.find(key);
    if (it == j.end()) fail(where, std::string("missing key '") + key + "'");
    return *it;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const char* where) {
    if (!j.is_object()) fail(where, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::none_of(allowed.begin(), allowed.end(),
                         [&](const char* k) { return it.key() == k; }))
            fail(where, "unknown key '" + it.key() + "'");
}

double num(const json& j, const char* key, const char* where) {
    const json& v = member(j, key, where);
    if (!v.is_number()) fail(where, std::string("'") + key + "' must be a number");
    return v.get<double>();
}

double num_or(const json& j, const char* key, double fallback, const char* where) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return num(j, key, where);
}

long long integer(const json& j, const char* key, const char* where) {
    const json& v = member(j, key, where);
    if (!v.is_number_integer())
        fail(where, std::string("'") + key + "' must be an integer");
    return v.get<long long>();
}

long long integer_or(const json& j, const char* key, long long fallback,
                     const char* where) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return integer(j, key, where);
}

bool flag_or(const json& j, const char* key, bool fallback, const char* where) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_boolean()) fail(where, std::string("'") + key + "' must be a boolean");
    return v.get<bool>();
}

std::string text(const json& j, const char* key, const char* where) {
    const json& v = member(j, key, where);
    if (!v.is_string()) fail(where, std::string("'") + key + "' must be a string");
    return v.get<std::string>();
}

std::string text_or(const json& j, const char* key, const std::string& fallback,
                    const char* where) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return text(j, key, where);
}

std::vector<double> number_list(const json& v, const char* where) {
    if (!v.is_array()) fail(where, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& x : v) {
        if (!x.is_number()) fail(where, "expected an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

using FnX = std::function<double(double)>;
using FnTX = std::function<double(double, double)>;

// Scalar field forms shared by obstacles, terminal data and SDE
// coefficients.  `t_coeff` adds a linear ramp in t where a time argument
// exists.
FnTX parse_field(const json& j, const char* where, bool allow_time) {
    const std::string fn = text(j, "fn", where);
    if (!allow_time && j.contains("t_coeff"))
        fail(where, "'t_coeff' is not meaningful here");
    const double tc = num_or(j, "t_coeff", 0.0, where);
    if (fn == "constant") {
        check_keys(j, { "fn", "value", "t_coeff" }, where);
        const double v = num(j, "value", where);
        return [v, tc](double t, double) { return v + tc * t; };
    }
    if (fn == "affine") {
        check_keys(j, { "fn", "a", "b", "t_coeff" }, where);
        const double a = num_or(j, "a", 0.0, where);
        const double b = num_or(j, "b", 0.0, where);
        return [a, b, tc](double t, double x) { return a + b * x + tc * t; };
    }
    if (fn == "tanh") {
        check_keys(j, { "fn", "scale", "shift", "t_coeff" }, where);
        const double s = num_or(j, "scale", 1.0, where);
        const double c = num_or(j, "shift", 0.0, where);
        return [s, c, tc](double t, double x) {
            return s * std::tanh(x) + c + tc * t;
        };
    }
    if (fn == "sin") {
        check_keys(j, { "fn", "scale", "freq", "shift", "t_coeff" }, where);
        const double s = num_or(j, "scale", 1.0, where);
        const double w = num_or(j, "freq", 1.0, where);
        const double c = num_or(j, "shift", 0.0, where);
        return [s, w, c, tc](double t, double x) {
            return s * std::sin(w * x) + c + tc * t;
        };
    }
    if (fn == "abs") {
        check_keys(j, { "fn", "scale", "shift", "t_coeff" }, where);
        const double s = num_or(j, "scale", 1.0, where);
        const double c = num_or(j, "shift", 0.0, where);
        return [s, c, tc](double t, double x) {
            return s * std::abs(x) + c + tc * t;
        };
    }
    fail(where, "unknown field form '" + fn + "'");
}

FnX parse_field_x(const json& j, const char* where) {
    FnTX f = parse_field(j, where, false);
    return [f = std::move(f)](double x) { return f(0.0, x); };
}

// (x, e) -> value; used for jump amplitudes beta and jump weights gamma.
FnTX parse_mark_field(const json& j, const char* where) {
    const std::string fn = text(j, "fn", where);
    if (fn == "mark") {
        check_keys(j, { "fn", "scale" }, where);
        const double s = num_or(j, "scale", 1.0, where);
        return [s](double, double e) { return s * e; };
    }
    if (fn == "constant") {
        check_keys(j, { "fn", "value" }, where);
        const double v = num(j, "value", where);
        return [v](double, double) { return v; };
    }
    fail(where, "unknown mark field form '" + fn + "'");
}

MarkSpace parse_marks(const json& v, const char* where) {
    if (!v.is_array()) fail(where, "'marks' must be an array");
    std::vector<Mark> atoms;
    for (const auto& e : v) {
        check_keys(e, { "e", "nu" }, where);
        atoms.push_back({ num(e, "e", where), num(e, "nu", where) });
    }
    return make_mark_space(std::move(atoms));
}

// Conservative psi defaults matching the catalog's analytic bounds.
std::vector<double> default_psi(const std::string& id,
                                const std::map<std::string, double>& params,
                                const std::map<std::string, std::vector<double>>& vec_params,
                                const MarkSpace& marks) {
    std::vector<double> psi(marks.size(), 0.0);
    if (id == "kplus") {
        const auto mark = params.find("mark");
        const auto scale = params.find("scale");
        if (mark != params.end() && scale != params.end()) {
            const int i = static_cast<int>(mark->second);
            if (i >= 0 && i < marks.size() && marks.atoms[i].nu > 0.0)
                psi[i] = std::abs(scale->second) / marks.atoms[i].nu;
        }
    } else if (id == "tanh_mix") {
        const auto g = vec_params.find("gamma");
        if (g != vec_params.end())
            for (int i = 0; i < marks.size() && i < static_cast<int>(g->second.size()); ++i)
                psi[i] = std::abs(g->second[i]);
    } else if (id == "smooth_k") {
        const auto s = vec_params.find("s");
        if (s != vec_params.end())
            for (int i = 0; i < marks.size() && i < static_cast<int>(s->second.size()); ++i)
                psi[i] = std::abs(s->second[i]);
    }
    return psi;
}

// Per-node vectors can only be validated once the lattice exists.
void validate_node_sizes(const DriverSpec& spec, int n, const char* where) {
    if (spec.form == DriverForm::Process &&
        static_cast<int>(spec.process.size()) != n)
        fail(where, "process driver needs one value per node");
    if (!spec.offset.empty() && static_cast<int>(spec.offset.size()) != n)
        fail(where, "driver offset needs one value per node");
    for (const auto& g : spec.family) validate_node_sizes(g, n, where);
}

std::uint64_t resolve_seed(const json& config, const RunOptions& opts) {
    if (opts.seed) return *opts.seed;
    if (config.is_object() && config.contains("seed")) {
        const json& v = config.at("seed");
        if (!v.is_number_integer())
            fail("config", "'seed' must be an unsigned integer");
        return v.get<std::uint64_t>();
    }
    return 20240901ull;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot open " + p.string() + " for writing");
    out << content;
    if (!out) throw ConfigError("failed writing " + p.string());
}

void write_report(const RunOptions& opts, const json& report) {
    write_file(std::filesystem::path(opts.out_dir) / "report.json",
               report.dump(2) + "\n");
}

json invariants_to_json(const InvariantReport& r) {
    return json{ { "band", r.band },
                 { "terminal", r.terminal },
                 { "dynamics", r.dynamics },
                 { "negative_increment", r.negative_inc },
                 { "singularity", r.singularity },
                 { "skorokhod_up", r.skorokhod_up },
                 { "skorokhod_down", r.skorokhod_down },
                 { "worst", r.worst() } };
}

json saddle_to_json(const SaddleReport& s) {
    json j;
    j["value"] = s.value;
    j["y_at_start"] = s.y_at_start;
    j["verified"] = s.verified;
    j["worst_violation"] = s.worst_violation;
    j["deviations"] = s.deviations;
    j["tau_star"] = s.tau_star.stops;
    j["sigma_star"] = s.sigma_star.stops;
    if (s.eps > 0.0) {
        j["eps"] = s.eps;
        j["K"] = s.K;
        j["tau_eps"] = s.tau_eps.stops;
        j["sigma_eps"] = s.sigma_eps.stops;
        j["eps_worst_loss"] = s.eps_worst_loss;
        j["eps_verified"] = s.eps_verified;
    }
    return j;
}

std::string drbsde_csv(const Lattice& lat, const DrbsdeSolution& sol) {
    const int m = lat.marks.size();
    std::ostringstream out;
    out << "node,level,time,state,y,z";
    for (int i = 0; i < m; ++i) out << ",k_" << i;
    out << ",inc_up,inc_down";
    const bool cum = !sol.cum_up.empty();
    if (cum) out << ",cum_up,cum_down";
    out << "\n";
    for (int v = 0; v < lat.num_nodes(); ++v) {
        const auto& nd = lat.node(v);
        out << v << ',' << nd.level << ','
            << format_double(lat.grid.time(nd.level)) << ','
            << format_double(nd.state) << ',' << format_double(sol.base.y[v])
            << ',' << format_double(sol.base.z[v]);
        for (int i = 0; i < m; ++i)
            out << ','
                << format_double(sol.base.k[static_cast<std::size_t>(v) * m + i]);
        out << ',' << format_double(sol.inc_up[v]) << ','
            << format_double(sol.inc_down[v]);
        if (cum)
            out << ',' << format_double(sol.cum_up[v]) << ','
                << format_double(sol.cum_down[v]);
        out << '\n';
    }
    return out.str();
}

GameCaps parse_caps(const json& config) {
    GameCaps caps;
    if (!config.contains("caps")) return caps;
    const json& j = config.at("caps");
    check_keys(j, { "max_interior", "max_rule_pairs" }, "caps");
    caps.max_interior =
        static_cast<int>(integer_or(j, "max_interior", caps.max_interior, "caps"));
    caps.max_rule_pairs =
        integer_or(j, "max_rule_pairs", caps.max_rule_pairs, "caps");
    return caps;
}

InstanceOptions parse_instance_options(const json& config) {
    InstanceOptions opt;
    if (!config.contains("options")) return opt;
    const json& j = config.at("options");
    check_keys(j,
               { "max_steps", "max_marks", "max_horizon", "max_lipschitz",
                 "monotone_regime", "obstacle_scale", "gap_scale",
                 "allow_nonlinear" },
               "options");
    opt.max_steps = static_cast<int>(integer_or(j, "max_steps", opt.max_steps, "options"));
    opt.max_marks = static_cast<int>(integer_or(j, "max_marks", opt.max_marks, "options"));
    opt.max_horizon = num_or(j, "max_horizon", opt.max_horizon, "options");
    opt.max_lipschitz = num_or(j, "max_lipschitz", opt.max_lipschitz, "options");
    opt.monotone_regime = flag_or(j, "monotone_regime", opt.monotone_regime, "options");
    opt.obstacle_scale = num_or(j, "obstacle_scale", opt.obstacle_scale, "options");
    opt.gap_scale = num_or(j, "gap_scale", opt.gap_scale, "options");
    opt.allow_nonlinear = flag_or(j, "allow_nonlinear", opt.allow_nonlinear, "options");
    if (opt.max_steps < 1 || opt.max_marks < 0 || opt.max_horizon <= 0.0)
        fail("options", "invalid instance bounds");
    return opt;
}

SdeSpec parse_sde(const json& j) {
    check_keys(j, { "b", "sigma", "beta", "marks" }, "problem.sde");
    SdeSpec sde;
    sde.b = parse_field_x(member(j, "b", "problem.sde"), "problem.sde.b");
    sde.sigma =
        parse_field_x(member(j, "sigma", "problem.sde"), "problem.sde.sigma");
    FnTX beta = j.contains("beta")
                    ? parse_mark_field(j.at("beta"), "problem.sde.beta")
                    : FnTX([](double, double e) { return e; });
    sde.beta = [beta = std::move(beta)](double x, double e) { return beta(x, e); };
    sde.marks = j.contains("marks") ? parse_marks(j.at("marks"), "problem.sde.marks")
                                    : make_mark_space({});
    return sde;
}

PideDriver parse_pide_driver(const json& j, const MarkSpace& marks) {
    check_keys(j, { "form", "a", "b", "d", "c", "gamma", "lipschitz_C" }, "problem.f");
    PideDriver f;
    f.form = text(j, "form", "problem.f");
    if (f.form == "zero") {
        check_keys(j, { "form" }, "problem.f");
        return f;
    }
    if (f.form != "linear") fail("problem.f", "'form' must be \"zero\" or \"linear\"");
    f.a = num_or(j, "a", 0.0, "problem.f");
    f.b = num_or(j, "b", 0.0, "problem.f");
    f.d = num_or(j, "d", 0.0, "problem.f");
    f.c = num_or(j, "c", 0.0, "problem.f");
    if (f.d < 0.0) fail("problem.f", "'d' must be nonnegative");
    if (j.contains("gamma")) f.gamma = parse_mark_field(j.at("gamma"), "problem.f.gamma");
    double drain = 0.0;
    for (const auto& a : marks.atoms) drain += a.nu;
    f.lipschitz_C = num_or(j, "lipschitz_C",
                           std::abs(f.a) + std::abs(f.b) + f.d * drain, "problem.f");
    return f;
}

PideProblem parse_pide_problem(const json& j) {
    check_keys(j, { "sde", "f", "lower", "upper", "terminal", "horizon" },
               "problem");
    PideProblem prob;
    prob.sde = parse_sde(member(j, "sde", "problem"));
    prob.f = parse_pide_driver(member(j, "f", "problem"), prob.sde.marks);
    prob.h1 = parse_field(member(j, "lower", "problem"), "problem.lower", true);
    prob.h2 = parse_field(member(j, "upper", "problem"), "problem.upper", true);
    prob.terminal =
        parse_field_x(member(j, "terminal", "problem"), "problem.terminal");
    prob.horizon = num(j, "horizon", "problem");
    if (prob.horizon <= 0.0) fail("problem", "'horizon' must be positive");
    return prob;
}

FdGrid parse_fd_grid(const json& j) {
    check_keys(j, { "xmin", "xmax", "points", "steps" }, "grid");
    FdGrid g;
    g.xmin = num(j, "xmin", "grid");
    g.xmax = num(j, "xmax", "grid");
    g.points = static_cast<int>(integer(j, "points", "grid"));
    g.steps = static_cast<int>(integer(j, "steps", "grid"));
    if (!(g.xmax > g.xmin)) fail("grid", "'xmax' must exceed 'xmin'");
    if (g.points < 3) fail("grid", "'points' must be at least 3");
    if (g.steps < 1) fail("grid", "'steps' must be at least 1");
    return g;
}

const char* regime_name(Regime r) {
    switch (r) {
    case Regime::LowerContact: return "lower";
    case Regime::UpperContact: return "upper";
    default: return "interior";
    }
}

// ---------------------------------------------------------------- runners

int run_drbsde(const json& config, const RunOptions& opts, std::string& log) {
    check_keys(config, { "kind", "model", "driver", "obstacles", "method" },
               "config");
    const ParsedModel pm = parse_model(member(config, "model", "config"));
    const Lattice lat = build_lattice(pm);
    const DriverSpec drv = parse_driver(member(config, "driver", "config"), lat.marks);
    validate_node_sizes(drv, lat.num_nodes(), "driver");
    const ObstaclePair obst =
        parse_obstacles(member(config, "obstacles", "config"), lat);
    const std::string method = text_or(config, "method", "dp", "config");

    DrbsdeSolution sol;
    if (method == "dp") sol = solve_drbsde_dp(lat, drv, obst);
    else if (method == "picard") sol = solve_drbsde_picard(lat, drv, obst);
    else fail("config", "'method' must be \"dp\" or \"picard\"");

    const InvariantReport inv = check_drbsde_invariants(lat, drv, obst, sol);
    // Picard stops on a 1e-11 sweep gap, so its dynamics residual is looser.
    const double tol = method == "dp" ? 1e-10 : 1e-9;
    const bool ok = inv.worst() <= tol;

    json report;
    report["kind"] = "drbsde";
    report["method"] = method;
    report["nodes"] = lat.num_nodes();
    report["y0"] = sol.base.y[0];
    if (method == "picard") report["picard_sweeps"] = sol.picard_sweeps;
    report["invariants"] = invariants_to_json(inv);
    report["tolerance"] = tol;
    report["ok"] = ok;
    report["config"] = config;
    write_report(opts, report);
    write_file(std::filesystem::path(opts.out_dir) / "solution.csv",
               drbsde_csv(lat, sol));

    log += "y0 = " + format_double(sol.base.y[0]) + "\n";
    log += "worst invariant residual = " + format_double(inv.worst()) + "\n";
    if (!ok) log += "violation: invariant residual exceeds tolerance\n";
    return ok ? kExitOk : kExitViolation;
}

int run_snell(const json& config, const RunOptions& opts, std::string& log) {
    check_keys(config, { "kind", "model", "driver", "obstacles" }, "config");
    const ParsedModel pm = parse_model(member(config, "model", "config"));
    const Lattice lat = build_lattice(pm);
    const DriverSpec drv = parse_driver(member(config, "driver", "config"), lat.marks);
    if (drv.form != DriverForm::Zero && drv.form != DriverForm::Process)
        fail("config", "snell runs take a zero or process driver");
    validate_node_sizes(drv, lat.num_nodes(), "driver");
    const ObstaclePair obst =
        parse_obstacles(member(config, "obstacles", "config"), lat);

    const int n = lat.num_nodes();
    NodeValues cost(n, 0.0);
    const std::vector<double> kzero(lat.marks.size(), 0.0);
    for (int v = 0; v < lat.num_interior(); ++v)
        cost[v] = eval_driver(drv, lat.marks, v, lat.grid.time(lat.node(v).level),
                              0.0, 0.0, kzero);

    const SnellPair sp = solve_snell_system(lat, cost, obst);
    const NodeValues recon = sp.reconstructed();
    const DrbsdeSolution dp = solve_drbsde_dp(lat, drv, obst);
    const MokobodskiWitnesses wit = mokobodski_witnesses(lat, cost, obst);

    double recon_gap = 0.0;
    double wit_negativity = 0.0, wit_band = 0.0, wit_super = 0.0;
    for (int v = 0; v < n; ++v) {
        recon_gap = std::max(recon_gap, std::abs(recon[v] - dp.base.y[v]));
        wit_negativity = std::max({ wit_negativity, -wit.H[v], -wit.Hp[v] });
        const double d = wit.H[v] - wit.Hp[v];
        wit_band = std::max({ wit_band, sp.xi_tilde[v] - d, d - sp.zeta_tilde[v] });
        if (!lat.is_terminal(v)) {
            double mh = 0.0, mhp = 0.0;
            for (const auto& e : lat.edges(v)) {
                mh += e.p * wit.H[e.child];
                mhp += e.p * wit.Hp[e.child];
            }
            wit_super = std::max({ wit_super, mh - wit.H[v], mhp - wit.Hp[v] });
        }
    }
    const bool ok = recon_gap <= 1e-10 && wit_negativity <= 1e-10 &&
                    wit_band <= 1e-10 && wit_super <= 1e-10;

    json report;
    report["kind"] = "snell";
    report["nodes"] = n;
    report["iterations"] = sp.iterations;
    report["final_gap"] = sp.final_gap;
    report["y0"] = recon[0];
    report["y0_dp"] = dp.base.y[0];
    report["reconstruction_gap"] = recon_gap;
    report["witness"] = json{ { "negativity", wit_negativity },
                              { "band", wit_band },
                              { "supermartingale", wit_super } };
    report["ok"] = ok;
    report["config"] = config;
    write_report(opts, report);

    std::ostringstream csv;
    csv << "node,level,time,J,Jp,shift,xi_tilde,zeta_tilde,reconstructed,y_dp\n";
    for (int v = 0; v < n; ++v) {
        const auto& nd = lat.node(v);
        csv << v << ',' << nd.level << ','
            << format_double(lat.grid.time(nd.level)) << ','
            << format_double(sp.J[v]) << ',' << format_double(sp.Jp[v]) << ','
            << format_double(sp.shift[v]) << ',' << format_double(sp.xi_tilde[v])
            << ',' << format_double(sp.zeta_tilde[v]) << ','
            << format_double(recon[v]) << ',' << format_double(dp.base.y[v])
            << '\n';
    }
    write_file(std::filesystem::path(opts.out_dir) / "solution.csv", csv.str());

    log += "coupled iterations = " + std::to_string(sp.iterations) + "\n";
    log += "reconstruction gap = " + format_double(recon_gap) + "\n";
    if (!ok) log += "violation: reconstruction or witness residual too large\n";
    return ok ? kExitOk : kExitViolation;
}

int run_game(const json& config, const RunOptions& opts, std::string& log) {
    check_keys(config, { "kind", "model", "driver", "obstacles", "caps", "eps" },
               "config");
    const ParsedModel pm = parse_model(member(config, "model", "config"));
    const Lattice lat = build_lattice(pm);
    const DriverSpec drv = parse_driver(member(config, "driver", "config"), lat.marks);
    validate_node_sizes(drv, lat.num_nodes(), "driver");
    const ObstaclePair obst =
        parse_obstacles(member(config, "obstacles", "config"), lat);
    const GameCaps caps = parse_caps(config);
    const double eps = num_or(config, "eps", 0.0, "config");

    const GameReport rep = game_values_bruteforce(lat, drv, obst, caps, opts.force);
    const DrbsdeSolution sol = solve_drbsde_dp(lat, drv, obst);
    const SaddleReport sad = extract_saddle(lat, drv, obst, sol, 0, eps, caps);

    const bool ok = rep.value_exists && rep.drbsde_gap <= kSaddleSlack &&
                    sad.verified && (eps <= 0.0 || sad.eps_verified);

    json report;
    report["kind"] = "game";
    report["nodes"] = lat.num_nodes();
    report["rules"] = rep.rules;
    report["pairs"] = rep.pairs;
    report["y0"] = rep.y[0];
    report["upper0"] = rep.upper[0];
    report["lower0"] = rep.lower[0];
    report["value_gap"] = rep.value_gap;
    report["drbsde_gap"] = rep.drbsde_gap;
    report["value_exists"] = rep.value_exists;
    report["saddle"] = saddle_to_json(sad);
    report["ok"] = ok;
    report["config"] = config;
    write_report(opts, report);

    std::ostringstream csv;
    csv << "node,level,time,upper,lower,y\n";
    for (int v = 0; v < lat.num_nodes(); ++v) {
        const auto& nd = lat.node(v);
        csv << v << ',' << nd.level << ','
            << format_double(lat.grid.time(nd.level)) << ','
            << format_double(rep.upper[v]) << ',' << format_double(rep.lower[v])
            << ',' << format_double(rep.y[v]) << '\n';
    }
    write_file(std::filesystem::path(opts.out_dir) / "solution.csv", csv.str());

    log += "rules = " + std::to_string(rep.rules) +
           ", pair evaluations = " + std::to_string(rep.pairs) + "\n";
    log += "value gap = " + format_double(rep.value_gap) +
           ", gap to the reflected solution = " + format_double(rep.drbsde_gap) +
           "\n";
    if (!ok) log += "violation: game value or saddle check failed\n";
    return ok ? kExitOk : kExitViolation;
}

int run_mixed_game(const json& config, const RunOptions& opts, std::string& log) {
    check_keys(config,
               { "kind", "model", "family", "obstacles", "caps", "eps",
                 "brute_force", "max_evals", "density_check" },
               "config");
    const ParsedModel pm = parse_model(member(config, "model", "config"));
    const Lattice lat = build_lattice(pm);
    const MixedGameSpec fam =
        parse_mixed_family(member(config, "family", "config"), lat.marks);
    for (const auto& g : fam.family)
        validate_node_sizes(g, lat.num_nodes(), "family");
    const ObstaclePair obst =
        parse_obstacles(member(config, "obstacles", "config"), lat);
    const GameCaps caps = parse_caps(config);
    const double eps = num_or(config, "eps", 0.0, "config");

    const MixedGameReport rep = solve_mixed_game(lat, fam, obst, caps, opts.force, eps);
    const bool tree = lat.path_unique();

    std::vector<std::string> violations;
    if (!rep.isaacs_ok) violations.push_back("per-node saddle condition fails");
    if (tree && !rep.saddle.verified)
        violations.push_back("stopping saddle not verified");

    json report;
    report["kind"] = "mixed-game";
    report["nodes"] = lat.num_nodes();
    report["y0"] = rep.sol.base.y[0];
    report["isaacs_ok"] = rep.isaacs_ok;
    report["isaacs_violation"] = rep.isaacs_violation;
    if (tree) report["saddle"] = saddle_to_json(rep.saddle);

    if (flag_or(config, "brute_force", false, "config")) {
        const auto max_evals =
            integer_or(config, "max_evals", 2000000, "config");
        const MixedBruteForce bf =
            mixed_game_bruteforce(lat, fam, obst, 0, max_evals);
        const double value_gap = std::abs(bf.upper - bf.lower);
        const double solve_gap = std::abs(bf.upper - rep.sol.base.y[0]);
        report["brute_force"] = json{ { "upper", bf.upper },
                                      { "lower", bf.lower },
                                      { "evaluations", bf.evaluations },
                                      { "value_gap", value_gap },
                                      { "solve_gap", solve_gap } };
        if (value_gap > kSaddleSlack)
            violations.push_back("brute-force upper and lower values differ");
        if (solve_gap > kSaddleSlack)
            violations.push_back("brute-force value differs from the solve");
    }
    if (flag_or(config, "density_check", false, "config")) {
        const double gap =
            mixed_density_crosscheck(lat, fam, obst, rep.u_star, rep.v_star, caps);
        report["density_gap"] = gap;
        if (gap > 1e-10)
            violations.push_back("density representation disagrees with the solve");
    }

    const bool ok = violations.empty();
    report["ok"] = ok;
    if (!ok) report["violations"] = violations;
    report["config"] = config;
    write_report(opts, report);

    std::ostringstream csv;
    csv << "node,level,time,y,u_star,v_star\n";
    for (int v = 0; v < lat.num_nodes(); ++v) {
        const auto& nd = lat.node(v);
        csv << v << ',' << nd.level << ','
            << format_double(lat.grid.time(nd.level)) << ','
            << format_double(rep.sol.base.y[v]) << ',' << rep.u_star[v] << ','
            << rep.v_star[v] << '\n';
    }
    write_file(std::filesystem::path(opts.out_dir) / "solution.csv", csv.str());

    log += "y0 = " + format_double(rep.sol.base.y[0]) + "\n";
    for (const auto& s : violations) log += "violation: " + s + "\n";
    return ok ? kExitOk : kExitViolation;
}

int run_comparison_harness(const json& config, const RunOptions& opts,
                           std::string& log) {
    check_keys(config,
               { "kind", "instances", "strict_cases", "tol", "seed", "options" },
               "config");
    const InstanceOptions opt = parse_instance_options(config);
    const long long instances = integer_or(config, "instances", 100, "config");
    const long long strict_cases = integer_or(config, "strict_cases", 0, "config");
    const double tol = num_or(config, "tol", 1e-10, "config");
    const std::uint64_t seed = resolve_seed(config, opts);
    if (instances < 0 || strict_cases < 0)
        fail("config", "instance counts must be nonnegative");

    std::ostringstream lines;
    long long failures = 0, unmet = 0;
    double worst = 0.0;

    for (long long i = 0; i < instances; ++i) {
        const std::uint64_t s = seed + static_cast<std::uint64_t>(i);
        Rng rng(s);
        const OrderedPair pair = random_ordered_pair(rng, opt);
        const ComparisonRecord rec = check_comparison(pair, tol);
        worst = std::max(worst, rec.worst_violation);
        json line;
        line["case"] = "comparison";
        line["index"] = i;
        line["seed"] = s;
        line["steps"] = pair.lat->grid.steps;
        line["marks"] = pair.lat->marks.size();
        line["nodes"] = pair.lat->num_nodes();
        line["worst_violation"] = rec.worst_violation;
        line["ok"] = rec.ok;
        if (!rec.ok) {
            ++failures;
            json replay = config;
            replay["kind"] = "comparison-harness";
            replay["instances"] = 1;
            replay["strict_cases"] = 0;
            replay["seed"] = s;
            line["replay"] = replay;
        }
        lines << line.dump() << "\n";
    }

    for (long long i = 0; i < strict_cases; ++i) {
        const std::uint64_t s =
            seed + static_cast<std::uint64_t>(instances) + static_cast<std::uint64_t>(i);
        Rng rng(s);
        const StrictComparisonRecord rec = strict_comparison_case(rng, opt);
        json line;
        line["case"] = "strict";
        line["index"] = i;
        line["seed"] = s;
        line["worst_violation"] = rec.worst_violation;
        line["theta_nodes"] = rec.theta_nodes;
        line["differ_after"] = rec.solutions_differ_after;
        switch (rec.status) {
        case StrictStatus::Ok: line["status"] = "ok"; break;
        case StrictStatus::HypothesisUnmet:
            line["status"] = "hypothesis-unmet";
            ++unmet;
            break;
        case StrictStatus::Violated: {
            line["status"] = "violated";
            ++failures;
            json replay = config;
            replay["kind"] = "comparison-harness";
            replay["instances"] = 0;
            replay["strict_cases"] = 1;
            replay["seed"] = s;
            line["replay"] = replay;
            break;
        }
        }
        if (!rec.detail.empty()) line["detail"] = rec.detail;
        lines << line.dump() << "\n";
    }

    const bool ok = failures == 0;
    json report;
    report["kind"] = "comparison-harness";
    report["seed"] = seed;
    report["instances"] = instances;
    report["strict_cases"] = strict_cases;
    report["failures"] = failures;
    report["hypothesis_unmet"] = unmet;
    report["worst_violation"] = worst;
    report["ok"] = ok;
    report["config"] = config;
    write_report(opts, report);
    write_file(std::filesystem::path(opts.out_dir) / "harness.jsonl", lines.str());

    log += std::to_string(instances) + " ordered pairs, worst violation " +
           format_double(worst) + "\n";
    if (strict_cases > 0)
        log += std::to_string(strict_cases) + " strict cases, " +
               std::to_string(unmet) + " with unmet hypotheses\n";
    if (!ok) log += "violation: " + std::to_string(failures) + " failures\n";
    return ok ? kExitOk : kExitViolation;
}

int run_estimate_harness(const json& config, const RunOptions& opts,
                         std::string& log) {
    check_keys(config,
               { "kind", "instances", "params", "options", "seed", "zero_check" },
               "config");
    const InstanceOptions opt = parse_instance_options(config);
    EstimateParams params;
    if (config.contains("params")) {
        const json& p = config.at("params");
        check_keys(p, { "C", "eta", "beta" }, "params");
        params.C = num_or(p, "C", params.C, "params");
        params.eta = num_or(p, "eta", params.eta, "params");
        params.beta = num_or(p, "beta", params.beta, "params");
    }
    const long long instances = integer_or(config, "instances", 100, "config");
    const bool zero_check = flag_or(config, "zero_check", false, "config");
    const std::uint64_t seed = resolve_seed(config, opts);
    if (instances < 0) fail("config", "'instances' must be nonnegative");

    std::ostringstream lines;
    long long failures = 0;
    double min_slack = std::numeric_limits<double>::infinity();

    for (long long i = 0; i < instances; ++i) {
        const std::uint64_t s = seed + static_cast<std::uint64_t>(i);
        Rng rng(s);
        const PerturbedPair pair = random_perturbed_pair(rng, opt, params);
        int node = 0;
        const EstimateRecord rec =
            check_apriori_estimate_all(*pair.lat, pair.driver1, pair.obst1,
                                       pair.driver2, pair.obst2, pair.gbar,
                                       params, &node);
        min_slack = std::min(min_slack, rec.slack);
        json line;
        line["case"] = "estimate";
        line["index"] = i;
        line["seed"] = s;
        line["steps"] = pair.lat->grid.steps;
        line["marks"] = pair.lat->marks.size();
        line["node"] = node;
        line["lhs"] = rec.lhs;
        line["rhs"] = rec.rhs;
        line["slack"] = rec.slack;
        line["ok"] = rec.ok;
        bool bad = !rec.ok;
        if (zero_check) {
            const EstimateRecord z =
                check_zero_estimate(*pair.lat, pair.driver1, pair.obst1, params, 0);
            line["zero_ok"] = z.ok;
            line["zero_slack"] = z.slack;
            bad = bad || !z.ok;
        }
        if (bad) {
            ++failures;
            json replay = config;
            replay["kind"] = "estimate-harness";
            replay["instances"] = 1;
            replay["seed"] = s;
            line["replay"] = replay;
        }
        lines << line.dump() << "\n";
    }

    const bool ok = failures == 0;
    json report;
    report["kind"] = "estimate-harness";
    report["seed"] = seed;
    report["instances"] = instances;
    report["params"] = json{ { "C", params.C },
                             { "eta", params.eta },
                             { "beta", params.beta } };
    report["failures"] = failures;
    report["min_slack"] = instances > 0 ? min_slack : 0.0;
    report["ok"] = ok;
    report["config"] = config;
    write_report(opts, report);
    write_file(std::filesystem::path(opts.out_dir) / "harness.jsonl", lines.str());

    log += std::to_string(instances) + " perturbed pairs, smallest slack " +
           format_double(instances > 0 ? min_slack : 0.0) + "\n";
    if (!ok) log += "violation: " + std::to_string(failures) + " failures\n";
    return ok ? kExitOk : kExitViolation;
}

int run_pide(const json& config, const RunOptions& opts, std::string& log) {
    check_keys(config, { "kind", "problem", "grid", "ordering_check" }, "config");
    const PideProblem prob = parse_pide_problem(member(config, "problem", "config"));
    const FdGrid grid = parse_fd_grid(member(config, "grid", "config"));

    const PideSolution sol = solve_pidvi(prob, grid);
    long long interior = 0, lower = 0, upper = 0;
    for (const Regime r : sol.regime) {
        if (r == Regime::LowerContact) ++lower;
        else if (r == Regime::UpperContact) ++upper;
        else ++interior;
    }

    std::vector<std::string> violations;
    json report;
    report["kind"] = "pide";
    report["dt"] = grid.dt(prob.horizon);
    report["cfl_dt"] = cfl_time_step(prob, grid);
    report["max_interior_residual"] = sol.max_interior_residual;
    report["cells"] = json{ { "interior", interior },
                            { "lower_contact", lower },
                            { "upper_contact", upper } };
    report["u_start_mid"] = sol.at(0, (grid.points - 1) / 2);

    if (config.contains("ordering_check")) {
        const json& oc = config.at("ordering_check");
        check_keys(oc, { "terminal_bump", "driver_bump" }, "ordering_check");
        const double db = num_or(oc, "driver_bump", 0.0, "ordering_check");
        FnX tb = oc.contains("terminal_bump")
                     ? parse_field_x(oc.at("terminal_bump"), "ordering_check")
                     : FnX([](double) { return 0.0; });
        const SchemeOrderingRecord rec =
            check_discrete_comparison_principle(prob, grid, tb, db);
        report["ordering"] =
            json{ { "monotonicity_violation", rec.monotonicity_violation },
                  { "ordering_violation", rec.ordering_violation },
                  { "ok", rec.ok } };
        if (!rec.ok) violations.push_back("scheme ordering check failed");
    }

    const bool ok = violations.empty();
    report["ok"] = ok;
    if (!ok) report["violations"] = violations;
    report["config"] = config;
    write_report(opts, report);

    std::ostringstream csv;
    csv << "t,x,u,regime\n";
    const double dt = grid.dt(prob.horizon);
    for (int lvl = 0; lvl <= grid.steps; ++lvl)
        for (int j = 0; j < grid.points; ++j)
            csv << format_double(lvl * dt) << ',' << format_double(grid.x(j))
                << ',' << format_double(sol.at(lvl, j)) << ','
                << regime_name(sol.regime_at(lvl, j)) << '\n';
    write_file(std::filesystem::path(opts.out_dir) / "solution.csv", csv.str());

    log += "interior residual = " + format_double(sol.max_interior_residual) +
           "\n";
    for (const auto& s : violations) log += "violation: " + s + "\n";
    return ok ? kExitOk : kExitViolation;
}

int run_crossvalidate(const json& config, const RunOptions& opts,
                      std::string& log) {
    check_keys(config,
               { "kind", "problem", "grid", "tree_steps", "points", "max_nodes",
                 "tol" },
               "config");
    const PideProblem prob = parse_pide_problem(member(config, "problem", "config"));
    const FdGrid grid = parse_fd_grid(member(config, "grid", "config"));
    const int tree_steps =
        static_cast<int>(integer(config, "tree_steps", "config"));
    const auto max_nodes = integer_or(config, "max_nodes", 500000, "config");

    const json& pts = member(config, "points", "config");
    if (!pts.is_array() || pts.empty())
        fail("config", "'points' must be a non-empty array of [t, x] pairs");
    std::vector<std::pair<double, double>> points;
    for (const auto& p : pts) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
            fail("config", "'points' must be a non-empty array of [t, x] pairs");
        points.emplace_back(p[0].get<double>(), p[1].get<double>());
    }

    const CrossValidationReport rep =
        crossvalidate_markovian(prob, grid, tree_steps, points, max_nodes);
    const bool checked = config.contains("tol");
    const double tol = num_or(config, "tol", 0.0, "config");
    const bool ok = !checked || rep.max_gap <= tol;

    json report;
    report["kind"] = "crossvalidate";
    report["tree_steps"] = tree_steps;
    report["max_gap"] = rep.max_gap;
    json arr = json::array();
    for (const auto& p : rep.points)
        arr.push_back(json{ { "t", p.t },
                            { "x", p.x },
                            { "u_fd", p.u_fd },
                            { "y_tree", p.y_tree },
                            { "gap", p.gap } });
    report["points"] = arr;
    if (checked) report["tol"] = tol;
    report["ok"] = ok;
    report["config"] = config;
    write_report(opts, report);

    std::ostringstream csv;
    csv << "t,x,u_fd,y_tree,gap\n";
    for (const auto& p : rep.points)
        csv << format_double(p.t) << ',' << format_double(p.x) << ','
            << format_double(p.u_fd) << ',' << format_double(p.y_tree) << ','
            << format_double(p.gap) << '\n';
    write_file(std::filesystem::path(opts.out_dir) / "solution.csv", csv.str());

    log += "max gap = " + format_double(rep.max_gap) + "\n";
    if (!ok) log += "violation: gap exceeds tolerance\n";
    return ok ? kExitOk : kExitViolation;
}

} // namespace

ParsedModel parse_model(const json& j) {
    check_keys(j, { "T", "N", "marks", "kind", "max_nodes" }, "model");
    ParsedModel m;
    const double T = num(j, "T", "model");
    const long long N = integer(j, "N", "model");
    if (T <= 0.0) fail("model", "'T' must be positive");
    if (N < 1) fail("model", "'N' must be at least 1");
    m.grid = make_time_grid(T, static_cast<int>(N));
    m.marks = j.contains("marks") ? parse_marks(j.at("marks"), "model.marks")
                                  : make_mark_space({});
    const std::string kind = text_or(j, "kind", "tree", "model");
    if (kind == "tree") m.kind = LatticeKind::Tree;
    else if (kind == "lattice") m.kind = LatticeKind::Recombining;
    else fail("model", "'kind' must be \"tree\" or \"lattice\"");
    m.max_nodes = integer_or(j, "max_nodes", kDefaultMaxNodes, "model");
    if (m.max_nodes < 1) fail("model", "'max_nodes' must be positive");
    return m;
}

Lattice build_lattice(const ParsedModel& m) {
    return m.kind == LatticeKind::Tree
               ? build_tree(m.grid, m.marks, m.max_nodes)
               : build_recombining(m.grid, m.marks, m.max_nodes);
}

DriverSpec parse_driver(const json& j, const MarkSpace& marks) {
    check_keys(j,
               { "form", "values", "lipschitz_C", "beta", "b_z", "gamma", "c",
                 "id", "params", "vec_params", "psi", "n_u", "n_v", "family",
                 "offset" },
               "driver");
    const std::string form = text(j, "form", "driver");
    const int m = marks.size();
    DriverSpec spec;
    if (form == "zero") {
        spec = zero_driver();
    } else if (form == "process") {
        spec = process_driver(number_list(member(j, "values", "driver"),
                                          "driver.values"),
                              num_or(j, "lipschitz_C", 0.0, "driver"));
    } else if (form == "linear") {
        std::vector<double> gamma(m, 0.0);
        if (j.contains("gamma")) {
            gamma = number_list(j.at("gamma"), "driver.gamma");
            if (static_cast<int>(gamma.size()) != m)
                fail("driver", "'gamma' needs one entry per mark");
        }
        spec = linear_driver(marks, num_or(j, "beta", 0.0, "driver"),
                             std::move(gamma), num_or(j, "c", 0.0, "driver"),
                             num_or(j, "b_z", 0.0, "driver"));
    } else if (form == "catalog") {
        const std::string id = text(j, "id", "driver");
        std::map<std::string, double> params;
        if (j.contains("params")) {
            const json& p = j.at("params");
            if (!p.is_object()) fail("driver", "'params' must be an object");
            for (auto it = p.begin(); it != p.end(); ++it) {
                if (!it.value().is_number())
                    fail("driver", "'params' values must be numbers");
                params[it.key()] = it.value().get<double>();
            }
        }
        std::map<std::string, std::vector<double>> vec_params;
        if (j.contains("vec_params")) {
            const json& p = j.at("vec_params");
            if (!p.is_object()) fail("driver", "'vec_params' must be an object");
            for (auto it = p.begin(); it != p.end(); ++it)
                vec_params[it.key()] =
                    number_list(it.value(), "driver.vec_params");
        }
        std::vector<double> psi = j.contains("psi")
                                      ? number_list(j.at("psi"), "driver.psi")
                                      : default_psi(id, params, vec_params, marks);
        spec = catalog_driver(id, std::move(params), std::move(vec_params), 0.0,
                              std::move(psi));
        spec.lipschitz_C = j.contains("lipschitz_C")
                               ? num(j, "lipschitz_C", "driver")
                               : implied_lipschitz(spec, marks);
    } else if (form == "supinf") {
        const int n_u = static_cast<int>(integer(j, "n_u", "driver"));
        const int n_v = static_cast<int>(integer(j, "n_v", "driver"));
        if (n_u < 1 || n_v < 1)
            fail("driver", "'n_u' and 'n_v' must be positive");
        const json& arr = member(j, "family", "driver");
        if (!arr.is_array() ||
            static_cast<int>(arr.size()) != n_u * n_v)
            fail("driver", "'family' needs n_u*n_v entries (row-major)");
        std::vector<DriverSpec> family;
        family.reserve(arr.size());
        for (const auto& g : arr) family.push_back(parse_driver(g, marks));
        spec = supinf_driver(n_u, n_v, std::move(family));
    } else {
        fail("driver", "unknown form '" + form + "'");
    }
    if (j.contains("offset"))
        spec.offset = number_list(j.at("offset"), "driver.offset");
    return spec;
}

ObstaclePair parse_obstacles(const json& j, const Lattice& lat) {
    check_keys(j, { "lower", "upper", "terminal", "lower_values", "upper_values" },
               "obstacles");
    const int n = lat.num_nodes();
    if (j.contains("lower_values") || j.contains("upper_values")) {
        if (j.contains("lower") || j.contains("upper") || j.contains("terminal"))
            fail("obstacles", "explicit arrays cannot be mixed with field forms");
        auto lower = number_list(member(j, "lower_values", "obstacles"),
                                 "obstacles.lower_values");
        auto upper = number_list(member(j, "upper_values", "obstacles"),
                                 "obstacles.upper_values");
        if (static_cast<int>(lower.size()) != n ||
            static_cast<int>(upper.size()) != n)
            fail("obstacles", "explicit arrays need one value per node");
        return make_obstacles(lat, std::move(lower), std::move(upper));
    }
    const FnTX h1 = parse_field(member(j, "lower", "obstacles"),
                                "obstacles.lower", true);
    const FnTX h2 = parse_field(member(j, "upper", "obstacles"),
                                "obstacles.upper", true);
    const FnX g = parse_field_x(member(j, "terminal", "obstacles"),
                                "obstacles.terminal");
    return obstacle_on_lattice(lat, h1, h2, g);
}

MixedGameSpec parse_mixed_family(const json& j, const MarkSpace& marks) {
    check_keys(j, { "n_u", "n_v", "family" }, "family");
    MixedGameSpec spec;
    spec.n_u = static_cast<int>(integer(j, "n_u", "family"));
    spec.n_v = static_cast<int>(integer(j, "n_v", "family"));
    if (spec.n_u < 1 || spec.n_v < 1)
        fail("family", "'n_u' and 'n_v' must be positive");
    const json& arr = member(j, "family", "family");
    if (!arr.is_array() ||
        static_cast<int>(arr.size()) != spec.n_u * spec.n_v)
        fail("family", "'family' needs n_u*n_v driver entries (row-major)");
    spec.family.reserve(arr.size());
    for (const auto& g : arr) spec.family.push_back(parse_driver(g, marks));
    return spec;
}

json model_to_json(const ParsedModel& m) {
    json j;
    j["T"] = m.grid.horizon;
    j["N"] = m.grid.steps;
    json arr = json::array();
    for (const auto& a : m.marks.atoms)
        arr.push_back(json{ { "e", a.e }, { "nu", a.nu } });
    j["marks"] = arr;
    j["kind"] = m.kind == LatticeKind::Tree ? "tree" : "lattice";
    j["max_nodes"] = m.max_nodes;
    return j;
}

json driver_to_json(const DriverSpec& spec) {
    json j;
    switch (spec.form) {
    case DriverForm::Zero:
        j["form"] = "zero";
        break;
    case DriverForm::Process:
        j["form"] = "process";
        j["values"] = spec.process;
        if (spec.lipschitz_C != 0.0) j["lipschitz_C"] = spec.lipschitz_C;
        break;
    case DriverForm::Linear:
        j["form"] = "linear";
        j["beta"] = spec.beta;
        j["b_z"] = spec.b_z;
        j["gamma"] = spec.gamma;
        j["c"] = spec.c;
        break;
    case DriverForm::Catalog:
        j["form"] = "catalog";
        j["id"] = spec.id;
        j["params"] = spec.params;
        if (!spec.vec_params.empty()) j["vec_params"] = spec.vec_params;
        j["lipschitz_C"] = spec.lipschitz_C;
        if (!spec.psi_bound.empty()) j["psi"] = spec.psi_bound;
        break;
    case DriverForm::SupInf: {
        j["form"] = "supinf";
        j["n_u"] = spec.n_u;
        j["n_v"] = spec.n_v;
        json fam = json::array();
        for (const auto& g : spec.family) fam.push_back(driver_to_json(g));
        j["family"] = std::move(fam);
        break;
    }
    }
    if (!spec.offset.empty()) j["offset"] = spec.offset;
    return j;
}

json obstacles_to_json(const ObstaclePair& obst) {
    return json{ { "lower_values", obst.lower }, { "upper_values", obst.upper } };
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int run_experiment(const std::string& kind, const json& config,
                   const RunOptions& opts, std::string& log) {
    if (!config.is_object()) throw ConfigError("config: expected a JSON object");
    if (config.contains("kind")) {
        const json& v = config.at("kind");
        if (!v.is_string() || v.get<std::string>() != kind)
            throw ConfigError("config: 'kind' does not match the subcommand");
    }
    std::filesystem::create_directories(opts.out_dir);
    if (kind == "drbsde") return run_drbsde(config, opts, log);
    if (kind == "snell") return run_snell(config, opts, log);
    if (kind == "game") return run_game(config, opts, log);
    if (kind == "mixed-game") return run_mixed_game(config, opts, log);
    if (kind == "comparison-harness")
        return run_comparison_harness(config, opts, log);
    if (kind == "estimate-harness")
        return run_estimate_harness(config, opts, log);
    if (kind == "pide") return run_pide(config, opts, log);
    if (kind == "crossvalidate") return run_crossvalidate(config, opts, log);
    throw ConfigError("unknown experiment kind '" + kind + "'");
}

} // namespace dynkin
