#pragma once

// JSON-facing layer: experiment configs in, reports/CSV/JSONL out.  Schemas
// are documented in README.md; unknown keys are rejected so replay files stay
// honest.

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "dynkin/analysis.hpp"
#include "dynkin/games.hpp"
#include "dynkin/pide.hpp"

namespace dynkin {

using json = nlohmann::ordered_json;

struct ParsedModel {
    TimeGrid grid;
    MarkSpace marks;
    LatticeKind kind = LatticeKind::Tree;
    std::int64_t max_nodes = kDefaultMaxNodes;
};

ParsedModel parse_model(const json& j);
Lattice build_lattice(const ParsedModel& m);

DriverSpec parse_driver(const json& j, const MarkSpace& marks);
ObstaclePair parse_obstacles(const json& j, const Lattice& lat);
MixedGameSpec parse_mixed_family(const json& j, const MarkSpace& marks);

json model_to_json(const ParsedModel& m);
json driver_to_json(const DriverSpec& spec);
json obstacles_to_json(const ObstaclePair& obst);

// 17 significant digits: enough to round-trip any double.
std::string format_double(double v);

// Exit codes of the command runner.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;       // config or solver failure
inline constexpr int kExitViolation = 2;   // a checked property failed

struct RunOptions {
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    bool force = false;
};

// Dispatches one experiment of the given kind ("drbsde", "snell", "game",
// "mixed-game", "comparison-harness", "estimate-harness", "pide",
// "crossvalidate").  Writes report.json and, where applicable, solution.csv
// and harness.jsonl under out_dir.  Returns an exit code; diagnostic text
// goes to `log`.
int run_experiment(const std::string& kind, const json& config,
                   const RunOptions& opts, std::string& log);

} // namespace dynkin
