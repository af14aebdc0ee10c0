#include "integ/bundleclass.hpp"

namespace integ::bundleclass {

std::string to_string(Tri t) {
    switch (t) {
        case Tri::True: return "true";
        case Tri::False: return "false";
        case Tri::Unknown: break;
    }
    return "unknown";
}

std::string to_string(Mode m) {
    switch (m) {
        case Mode::Complete: return "complete";
        case Mode::Partial: return "partial";
        case Mode::Noncommutative: break;
    }
    return "noncommutative";
}

std::string to_string(Theorem t) {
    switch (t) {
        case Theorem::GlobCompl: return "GlobCompl";
        case Theorem::GlobPar: return "GlobPar";
        case Theorem::GlobSup: return "GlobSup";
        case Theorem::None: break;
    }
    return "none";
}

TopologyDecl TopologyDecl::box(std::string description) {
    return {Tri::True, Tri::True, Tri::True, std::move(description), Provenance::DerivedTrivially};
}

std::vector<std::string> split_product(Group g) {
    std::vector<std::string> out;
    if (g.a > 0) out.push_back("R^" + std::to_string(g.a));
    for (std::size_t i = 0; i < g.b; ++i) out.push_back("T^1");
    return out;
}

GlobalVerdict decide(Group group, const TopologyDecl& topo, Mode mode, const UpstreamFlags& upstream) {
    GlobalVerdict v;
    v.factors = split_product(group);
    if (group.b >= 1) {
        const std::string circles = "product of " + std::to_string(group.b) + " principal U(1)-bundles";
        v.splitting = group.a > 0 ? "P = P/T^" + std::to_string(group.b) + " x P/R^" + std::to_string(group.a) +
                                        ", with P/R^" + std::to_string(group.a) + " a " + circles
                                  : "P is a " + circles;
    }

    std::string base;
    switch (mode) {
        case Mode::Complete: v.theorem = Theorem::GlobCompl; base = "F(Z)"; break;
        case Mode::Partial: v.theorem = Theorem::GlobPar; base = "B"; break;
        case Mode::Noncommutative: v.theorem = Theorem::GlobSup; base = "V"; break;
    }
    if (upstream.structure == Tri::False) {
        v.theorem = Theorem::None;
        v.unmet.push_back("integrability hypotheses (false)");
        return v;
    }

    auto require = [&v](Tri t, const std::string& what) {
        if (t != Tri::True) v.unmet.push_back(what + " (" + to_string(t) + ")");
    };
    require(upstream.structure, mode == Mode::Noncommutative ? "closure with constant rank 2(k-n)"
                                                             : "involution of F");
    require(upstream.fibers, "fibers connected and mutually diffeomorphic");
    require(upstream.complete_fields, "Hamiltonian fields complete");
    if (mode == Mode::Noncommutative) require(upstream.casimirs, "2n-k independent Casimirs on V");

    // A contractible structure group always admits a global section, so the
    // topological hypotheses only matter when there is a compact factor.
    if (group.b >= 1) {
        Tri h2 = topo.H2_zero;
        if (topo.simply_connected == Tri::True && topo.pi2_zero != Tri::Unknown) {
            if (h2 == Tri::Unknown) {
                h2 = topo.pi2_zero;
            } else if (h2 != topo.pi2_zero) {
                v.diagnostics.push_back("inconsistent declarations: " + base +
                                        " simply connected but H^2 = 0 and pi_2 = 0 disagree");
                h2 = Tri::Unknown;
            }
        }
        require(topo.simply_connected, base + " simply connected");
        require(h2, "H^2(" + base + ", Z) = 0");
    }

    v.trivial = v.unmet.empty() ? Tri::True : Tri::Unknown;
    return v;
}

}  // namespace integ::bundleclass
