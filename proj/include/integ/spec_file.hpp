#pragma once

// System description files: a sectioned key = value format,
//
//   [system]     name, coords = ["p", "q"], dim, seed, samples, mode
//   [functions]  H = "(p^2 + q^2)/2"            (order is significant)
//   [closure]    {L1, L2} = "L3"                (over function names)
//   [casimirs]   C1 = "L1^2 + L2^2 + L3^2"      (over function names)
//   [box]        p = [-2, 2]
//   [singular]   r = "q1^2 + q2^2"              (samples near zero rejected)
//   [tolerances] involution, closure, lattice, darboux, casimir, connection
//   [topology]   simply_connected, H2_zero, pi2_zero, base, derived = "box"
//   [declarations] fibers_connected
//   [pipeline]   base_point, lattice_radius, lattice_step, horizon, blowup,
//                probes, completeness, lattice, action_angle, connection, global
//
// Values are "strings", numbers, true/false or [arrays]; '#' starts a comment.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "integ/bundleclass.hpp"
#include "integ/expr.hpp"
#include "integ/sampling.hpp"

namespace integ::cli {

struct SpecTolerances {
    double involution = 1e-10;
    double closure = 1e-8;
    double lattice = 1e-8;
    double darboux = 1e-4;
    double casimir = 1e-10;
    double connection = 1e-7;
};

struct PipelineConfig {
    std::optional<Vec> base_point;
    double lattice_radius = 10;
    double lattice_step = 0.05;
    double horizon = 100;
    double blowup = 1e8;
    std::size_t probes = 4;
    bool completeness = true;
    bool lattice = true;
    bool action_angle = true;
    bool connection = true;
    bool global = true;
};

enum class SpecMode { Auto, Complete, Partial, Noncommutative };

struct ClosureEntry {
    std::size_t a, b;
    std::string source;
};

struct NamedSource {
    std::string name;
    std::string source;
};

struct SystemSpec {
    std::string path;
    std::uint64_t hash = 0;

    std::string name;
    std::vector<std::string> coords;
    std::size_t n = 0;
    std::vector<NamedSource> functions;
    std::vector<expr::Expression> F;
    SpecMode mode = SpecMode::Auto;
    std::vector<ClosureEntry> closure;
    std::vector<NamedSource> casimirs;
    std::vector<expr::Expression> C;
    std::vector<expr::Expression> singular;
    Box box;
    std::uint64_t seed = 0;
    std::size_t samples = 100;
    SpecTolerances tol;
    bundleclass::TopologyDecl topology;
    bundleclass::Tri fibers_connected = bundleclass::Tri::Unknown;
    PipelineConfig pipeline;

    std::size_t k() const { return F.size(); }
    std::vector<std::string> function_names() const;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data);

/// Throws InputError with "label:line: message"; malformed expressions also
/// carry the byte offset inside the expression string.
SystemSpec parse_spec(std::string_view text, const std::string& label);
SystemSpec load_spec(const std::string& path);

}  // namespace integ::cli
