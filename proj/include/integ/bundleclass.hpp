#pragma once

// Global triviality of the fibration by invariant manifolds. The theorems are
// sufficient conditions only, so a failed or undeclared hypothesis yields
// "unknown", never "nontrivial". Topology is declared by the user, except for
// axis-aligned boxes, which are contractible.

#include <cstddef>
#include <string>
#include <vector>

namespace integ::bundleclass {

enum class Tri { False, True, Unknown };

std::string to_string(Tri t);

enum class Provenance { UserDeclared, DerivedTrivially };

struct TopologyDecl {
    Tri simply_connected = Tri::Unknown;
    Tri H2_zero = Tri::Unknown;
    /// pi_2 = 0; equivalent to H2_zero when the base is simply connected.
    Tri pi2_zero = Tri::Unknown;
    std::string base;
    Provenance provenance = Provenance::UserDeclared;

    /// A contractible axis-aligned box: every flag true.
    static TopologyDecl box(std::string description);
};

enum class Mode { Complete, Partial, Noncommutative };
enum class Theorem { GlobCompl, GlobPar, GlobSup, None };

std::string to_string(Mode m);
std::string to_string(Theorem t);

/// Hypotheses established (or not) by the numerical stages.
struct UpstreamFlags {
    /// Involution (complete/partial) or closure with constant rank (noncommutative).
    Tri structure = Tri::True;
    /// Fibers connected, mutually diffeomorphic, fibers of a submersion.
    Tri fibers = Tri::True;
    /// Completeness probes saw no blow-up.
    Tri complete_fields = Tri::True;
    /// 2n - k independent Casimirs on V (noncommutative mode only).
    Tri casimirs = Tri::True;
};

/// Structure group R^a x T^b.
struct Group {
    std::size_t a = 0;
    std::size_t b = 0;
    bool operator==(const Group&) const = default;
};

struct GlobalVerdict {
    Theorem theorem = Theorem::None;
    /// True or Unknown; never False.
    Tri trivial = Tri::Unknown;
    std::vector<std::string> factors;
    std::string splitting;
    std::vector<std::string> unmet;
    std::vector<std::string> diagnostics;
};

/// [R^a] followed by b copies of T^1; empty for the trivial group.
std::vector<std::string> split_product(Group g);

GlobalVerdict decide(Group group, const TopologyDecl& topo, Mode mode, const UpstreamFlags& upstream = {});

}  // namespace integ::bundleclass
