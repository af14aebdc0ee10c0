#pragma once

// The check pipeline behind `intcheck check`: structure (involution or
// closure) -> completeness probes -> period lattice -> action-angle chart ->
// connection checks -> global verdict. Stages that fail are recorded in the
// report; only stages that consume their output are skipped.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "integ/flows.hpp"
#include "integ/parallel.hpp"
#include "integ/spec_file.hpp"

namespace integ::cli {

enum ExitCode : int { kExitPassed = 0, kExitInputError = 1, kExitFailed = 2, kExitInconclusive = 3 };

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples;
    std::optional<double> involution, closure, lattice, darboux, casimir, connection;
};

void apply_overrides(SystemSpec& spec, const Overrides& o);

struct CheckOutcome {
    int exit_code = kExitPassed;
    /// Full report; wall-clock figures live under "timing" only.
    nlohmann::json report;
};

CheckOutcome run_check(const SystemSpec& spec, Execution exec = Execution::Parallel);

/// Structure and lattice stages only; the report carries just those.
CheckOutcome run_lattice(const SystemSpec& spec, Execution exec = Execution::Parallel);

/// Trajectory of X_G from the base point (or first sample), G a function or
/// Casimir name. Throws InputError for unknown names.
std::vector<flows::TrajectoryPoint> run_flow(const SystemSpec& spec, const std::string& field, double t);

}  // namespace integ::cli
