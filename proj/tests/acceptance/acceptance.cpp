// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "global_oracle.hpp"
#include "integ/affine.hpp"
#include "integ/bundleclass.hpp"
#include "integ/fibergeom.hpp"
#include "integ/flows.hpp"
#include "integ/integrability.hpp"
#include "support.hpp"

using namespace integ;
using namespace testsupport;
using symp::SymplecticChart;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        detail << (detail.tellp() > 0 ? "; " : "") << what << (ok ? "" : " [!]");
    }
};

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

std::vector<Vec> samples(const Box& box, std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    return sample_box(box, count, rng);
}

VectorField xy_field(const std::string& a, const std::string& b) {
    return VectorField::from_expressions(parse_all({a, b}, {"x", "y"}));
}

void involution(Outcome& o) {
    const auto chart = SymplecticChart::canonical(2);
    const auto r = integrability::check_involution(two_oscillators(), samples(cube(4, 2), 100, 1), chart);
    int min_rank = 2;
    for (const auto& s : r.samples) min_rank = std::min(min_rank, s.jacobian_rank);
    o.require(r.samples.size() == 100, "100 samples");
    o.require(r.max_involution_residual < 1e-12, "max |{F_i,F_j}| = " + sci(r.max_involution_residual));
    o.require(min_rank == 2, "Jacobian rank " + std::to_string(min_rank));
    o.require(r.verdict.label() == "complete(2)", r.verdict.label());
}

void noncommutative(Outcome& o) {
    const auto chart = SymplecticChart::canonical(3);
    const auto F = central_field();
    Rng rng(2);
    const auto generic = sample_box(cube(6, 1.5), 50, rng);
    const auto r = integrability::check_closure(F, integrability::with_fiber_partners(F, generic, rng, 0.1), chart);
    int lo = 99, hi = -1;
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
        lo = std::min(lo, r.samples[i].s_rank);
        hi = std::max(hi, r.samples[i].s_rank);
    }
    o.require(r.fiber_groups >= 50, std::to_string(r.fiber_groups) + " fiber pairs");
    o.require(r.closure_residual < 1e-8, "closure residual " + sci(r.closure_residual));
    o.require(lo == 2 && hi == 2, "rank(s) in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");

    const auto b = central_base();
    auto e = [&](const char* s) { return expr::parse(s, b); };
    const integrability::CoinducedStructure S(b, {{e("0"), e("0"), e("0"), e("0")},
                                                  {e("0"), e("0"), e("l3"), e("-l2")},
                                                  {e("0"), e("-l3"), e("0"), e("l1")},
                                                  {e("0"), e("l2"), e("-l1"), e("0")}});
    std::vector<Vec> base;
    for (const auto& s : r.samples) base.push_back(s.values);
    const auto cas = integrability::verify_casimirs(S, parse_all({"l1^2 + l2^2 + l3^2", "h"}, b), base, 2, 1e-12);
    o.require(cas.passed(), "Casimir residual " + sci(cas.residual));
}

void lattice(Outcome& o) {
    fibergeom::LatticeOptions opt;
    opt.radius = 10;
    opt.grid_step = 0.05;
    const SymplecticChart c1(1, pq());
    const flows::FlowAction osc({symp::hamiltonian_field(oscillator(), c1)}, v2(1, 0), {.tol = 1e-12});
    const auto lo = fibergeom::detect_lattice(osc, opt);
    const double err = lo.rank() == 1 ? std::abs(lo.basis[0][0] - kTwoPi) : 1;
    o.require(lo.rank() == 1 && err < 1e-8, "oscillator basis error " + sci(err));

    const flows::FlowAction free({symp::hamiltonian_field(expr::parse("p", pq()), c1)}, v2(1, 0));
    const auto lf = fibergeom::detect_lattice(free, opt);
    o.require(lf.rank() == 0, "free particle h = " + std::to_string(lf.rank()));

    const auto c2 = SymplecticChart::canonical(2);
    const auto F = cylinder();
    opt.grid_step = 0.1;
    const flows::FlowAction cyl({symp::hamiltonian_field(F[0], c2), symp::hamiltonian_field(F[1], c2)},
                                (Vec(4) << 0.5, 1, 0, 0).finished(), {.tol = 1e-12});
    const auto lc = fibergeom::detect_lattice(cyl, opt);
    const auto type = fibergeom::classify_fiber(lc);
    o.require(lc.rank() == 1 && type.label() == "R^1 x T^1", "cylinder " + type.label());
}

void action_angle(Outcome& o) {
    const SymplecticChart chart(1, pq());
    fibergeom::LatticeOptions opt;
    double worst = 0, darboux = 0;
    for (double E : {0.5, 1.0, 2.5}) {
        const flows::FlowAction action({symp::hamiltonian_field(oscillator(), chart)}, v2(std::sqrt(2 * E), 0),
                                       {.tol = 1e-12});
        const fibergeom::ActionAngleChart aa({oscillator()}, chart, action, fibergeom::detect_lattice(action, opt),
                                             fibergeom::default_primitive(chart));
        worst = std::max(worst, std::abs(aa.actions(action.base())[0] - oscillator_action_oracle(E, 100000)));
        if (E == 1.0) {
            const Vec b = action.base();
            darboux = fibergeom::darboux_residual(aa.as_map(), {b, b + v2(0.05, -0.03), b + v2(-0.04, 0.2)}, 1e-3,
                                                  chart);
        }
    }
    o.require(worst < 1e-6, "max |I(E) - oracle| = " + sci(worst));
    o.require(darboux < 1e-4, "Darboux residual " + sci(darboux));
}

void connection(Outcome& o) {
    using affine::ConnectionFrame;
    const auto c2 = SymplecticChart::canonical(2);
    const auto F = two_oscillators();
    const std::vector<std::string> xy{"x", "y"};
    struct Case {
        const char* name;
        ConnectionFrame frame;
        std::vector<std::string> coords;
        std::vector<std::string> cx, cy, cz;
    };
    const std::vector<Case> cases{
        {"commuting", {{xy_field("1", "x^2"), xy_field("0", "1")}, cube(2, 2)}, xy,
         {"1 + y^2", "x"}, {"x*y", "2"}, {"x^3 - y", "1 + x*y^2"}},
        {"non-commuting", {{xy_field("1", "0"), xy_field("0", "exp(x)")}, cube(2, 2)}, xy,
         {"1 + y^2", "x"}, {"x*y", "2"}, {"x^3 - y", "1 + x*y^2"}},
        {"hamiltonian-on-fiber",
         {{symp::hamiltonian_field(F[0], c2), symp::hamiltonian_field(F[1], c2)}, cube(4, 2)}, pq2(),
         {"1 + q1^2/4", "p2"}, {"q2", "1"}, {"1 + p1*q2", "q1^2/4"}},
    };
    double curv = 0, tors = 0, geo = 0;
    for (const auto& c : cases) {
        const auto X = linear_combination(parse_all(c.cx, c.coords), c.frame.fields);
        const auto Y = linear_combination(parse_all(c.cy, c.coords), c.frame.fields);
        const auto Z = linear_combination(parse_all(c.cz, c.coords), c.frame.fields);
        for (const auto& z : samples(c.frame.domain, 50, 5)) {
            curv = std::max(curv, affine::curvature(c.frame, X, Y, Z, z).norm());
            const Vec t = affine::torsion(c.frame, 0, 1, z) + symp::lie_bracket(c.frame.fields[0], c.frame.fields[1], z);
            tors = std::max(tors, t.norm());
        }
        const Vec start = c.frame.domain.lo * 0.25;
        for (std::size_t i = 0; i < c.frame.m(); ++i) geo = std::max(geo, affine::geodesic_residual(c.frame, i, start, 1.0));
    }
    o.require(curv < 1e-6, "curvature " + sci(curv));
    o.require(tors < 1e-8, "torsion + [X_i,X_j] " + sci(tors));
    o.require(geo < 1e-7, "geodesic residual " + sci(geo));

    const ConnectionFrame& A = cases[1].frame;
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-2, 2);
    const auto pts = samples(A.domain, 10, 7);
    double gerr = 0;
    bool all_same = true;
    for (int trial = 0; trial < 20; ++trial) {
        Mat G(2, 2);
        do {
            for (auto& g : G.reshaped()) g = u(rng);
        } while (std::abs(G.determinant()) < 0.1);
        const ConnectionFrame B{{linear_combination(Vec(G.col(0)), A.fields), linear_combination(Vec(G.col(1)), A.fields)},
                                A.domain};
        const auto eq = affine::equivalence_check(A, B, pts);
        all_same = all_same && eq.same;
        gerr = std::max(gerr, (eq.G - G).cwiseAbs().maxCoeff());
    }
    o.require(all_same && gerr < 1e-8, "20 constant G recovered, max error " + sci(gerr));
}

void omega_equality(Outcome& o) {
    const SymplecticChart c1(1, pq());
    const auto H = oscillator();
    const auto XH = symp::hamiltonian_field(H, c1);
    const affine::ConnectionFrame f1{{XH}, cube(2, 2)};
    const auto Y1 = linear_combination(parse_all({"q"}, pq()), {XH});
    double osc = 0;
    for (const auto& z : samples(cube(2, 2), 30, 11))
        osc = std::max(osc, (affine::omega_connection({H}, {XH}, XH, Y1, z, c1) - affine::nabla(f1, XH, Y1, z))
                                .cwiseAbs()
                                .maxCoeff());
    o.require(osc < 1e-7, "oscillator " + sci(osc));

    const auto c3 = SymplecticChart::canonical(3);
    const auto C = parse_all({"l1^2 + l2^2 + l3^2", "h"}, central_base());
    const auto X = integrability::derived_fields(C, central_field(), c3);
    const auto G = integrability::pullback(C, central_field());
    const affine::ConnectionFrame f3{X, cube(6, 1.5)};
    const auto Y = linear_combination(parse_all({"1 + q1^2/4", "q2*p3"}, pq3()), X);
    const auto Xd = linear_combination(parse_all({"p1", "1"}, pq3()), X);
    double cen = 0;
    for (const auto& z : samples(cube(6, 1.5), 30, 12))
        cen = std::max(cen, (affine::omega_connection(G, X, Xd, Y, z, c3) - affine::nabla(f3, Xd, Y, z))
                                .cwiseAbs()
                                .maxCoeff());
    o.require(cen < 1e-7, "central field " + sci(cen));
}

void holonomy(Outcome& o) {
    const affine::ConnectionFrame f{{xy_field("1", "0"), xy_field("0", "exp(x)")}, cube(2, 2)};
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> corner(-1.5, 0.5), side(0.1, 1.0), comp(-1, 1);
    double worst = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const Vec c = v2(corner(rng), corner(rng));
        const double w = side(rng), h = side(rng);
        const std::vector<Vec> loop{c, c + v2(w, 0), c + v2(w, h), c + v2(0, h), c};
        const Vec v0 = v2(comp(rng), comp(rng));
        worst = std::max(worst, (affine::parallel_transport(f, loop, v0).ode_vector - v0).norm());
    }
    o.require(worst < 1e-7, "20 loops, max return error " + sci(worst));
}

void global_table(Outcome& o) {
    using namespace integ::bundleclass;
    std::size_t checked = 0, mismatches = 0;
    for (const auto& m : kModes)
        for (const auto& r : kTable) {
            const auto v = decide({r.a, r.b}, {r.sc, r.h2, Tri::Unknown, "B", Provenance::UserDeclared}, m.mode);
            std::vector<std::string> unmet;
            for (const char* c = r.unmet; *c; ++c)
                unmet.push_back(*c == 'S' ? std::string(m.base) + " simply connected (false)"
                                          : "H^2(" + std::string(m.base) + ", Z) = 0 (false)");
            std::vector<std::string> factors;
            if (r.a > 0) factors.push_back("R^" + std::to_string(r.a));
            for (std::size_t i = 0; i < r.b; ++i) factors.push_back("T^1");
            ++checked;
            if (v.theorem != m.theorem || v.trivial != r.trivial || v.unmet != unmet || v.factors != factors)
                ++mismatches;
        }
    o.require(mismatches == 0, std::to_string(checked) + " rows, " + std::to_string(mismatches) + " mismatches");
}

void convergence(Outcome& o) {
    const SymplecticChart chart(1, pq());
    const auto X = symp::hamiltonian_field(oscillator(), chart);
    std::vector<double> err;
    for (double tol : {1e-6, 1e-8, 1e-10}) {
        flows::IntegratorOptions opt;
        opt.tol = tol;
        err.push_back((flows::integrate(X, v2(1, 0), kTwoPi, opt) - v2(1, 0)).norm());
    }
    const double r1 = err[0] / err[1], r2 = err[1] / err[2];
    o.require(r1 >= 4 && r2 >= 4, "errors " + sci(err[0]) + ", " + sci(err[1]) + ", " + sci(err[2]) +
                                      " (ratios " + sci(r1) + ", " + sci(r2) + ")");
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria{
        {"involution", involution},       {"noncommutative", noncommutative}, {"lattice", lattice},
        {"action-angle", action_angle},   {"connection", connection},         {"omega-connection", omega_equality},
        {"flat-holonomy", holonomy},      {"global-verdict", global_table},   {"convergence", convergence},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto start = std::chrono::steady_clock::now();
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failures;
        std::printf("%s %zu %s (%.1fs): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, secs,
                    o.detail.str().c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
