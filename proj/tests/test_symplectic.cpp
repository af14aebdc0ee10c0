#include <gtest/gtest.h>

#include <random>

#include "integ/symplectic.hpp"
#include "support.hpp"

using namespace integ;
using namespace testsupport;
using symp::SymplecticChart;

namespace {

Vec point(std::initializer_list<double> v) {
    Vec z(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) z[i++] = x;
    return z;
}

}  // namespace

TEST(Chart, OmegaSquaresToMinusIdentity) {
    for (std::size_t n = 1; n <= 4; ++n) {
        const auto chart = SymplecticChart::canonical(n);
        const Mat& W = chart.omega();
        EXPECT_EQ(W, -W.transpose());
        EXPECT_EQ(W * W, -Mat::Identity(2 * n, 2 * n));
        const Vec v = Vec::LinSpaced(2 * n, -1, 2);
        EXPECT_EQ(chart.sharp(chart.flat(v)), v);
    }
}

TEST(HamiltonianField, OscillatorAtUnitMomentum) {
    const SymplecticChart chart(1, pq());
    const auto X = symp::hamiltonian_field(oscillator(), chart);
    EXPECT_EQ(X(point({1, 0})), point({0, -1}));
}

TEST(HamiltonianField, MomentumGeneratesNegativeTranslation) {
    const SymplecticChart chart(1, pq());
    const auto X = symp::hamiltonian_field(expr::parse("p", pq()), chart);
    EXPECT_EQ(X(point({0.3, -4})), point({0, -1}));
    const auto Z = symp::hamiltonian_field(expr::parse("7", pq()), chart);
    EXPECT_EQ(Z(point({0.3, -4})), Vec::Zero(2));
}

TEST(HamiltonianField, DefiningRelationOmegaXEqualsDF) {
    // Omega(X_F, v) = dF(v) for every v, checked through the pairing.
    const auto chart = SymplecticChart::canonical(2);
    const auto F = expr::parse("p1*q2^2 + sin(q1)*p2", chart.names());
    const auto X = symp::hamiltonian_field(F, chart);
    const Vec z = point({0.2, -0.7, 1.1, 0.4});
    const Vec dF = F.jet1(z).gradient;
    for (Eigen::Index k = 0; k < 4; ++k) {
        const Vec e = Vec::Unit(4, k);
        EXPECT_NEAR(chart.pairing(X(z), e), dF[k], 1e-15);
    }
}

TEST(PoissonBracket, CanonicalPairIsPlusOne) {
    const SymplecticChart chart(1, pq());
    const auto q = expr::parse("q", pq()), p = expr::parse("p", pq());
    EXPECT_EQ(symp::poisson_bracket(q, p, point({0.5, 2}), chart), 1.0);
    EXPECT_EQ(symp::poisson_bracket(p, q, point({0.5, 2}), chart), -1.0);
    EXPECT_EQ(symp::poisson_bracket(oscillator(), oscillator(), point({0.5, 2}), chart), 0.0);
}

TEST(PoissonBracket, PlanarOscillatorCommutesWithAngularMomentum) {
    const std::vector<std::string> c{"px", "py", "x", "y"};
    const SymplecticChart chart(2, c);
    const auto H = expr::parse("(px^2 + py^2)/2 + (x^2 + y^2)/2", c);
    const auto L = expr::parse("x*py - y*px", c);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int i = 0; i < 20; ++i) {
        const Vec z = point({u(rng), u(rng), u(rng), u(rng)});
        EXPECT_LT(std::abs(symp::poisson_bracket(H, L, z, chart)), 1e-12);
    }
}

TEST(PoissonBracket, MatchesHandWrittenCanonicalFormula) {
    const auto chart = SymplecticChart::canonical(3);
    const auto F = central_field();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int s = 0; s < 20; ++s) {
        Vec z(6);
        for (auto& x : z) x = u(rng);
        const Mat B = symp::bracket_matrix(F, z, chart);
        for (std::size_t i = 0; i < F.size(); ++i)
            for (std::size_t j = 0; j < F.size(); ++j) {
                const double oracle = bracket_oracle(F[i].jet1(z).gradient, F[j].jet1(z).gradient);
                EXPECT_NEAR(B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), oracle, 1e-13);
                EXPECT_NEAR(symp::poisson_bracket(F[i], F[j], z, chart), oracle, 1e-13);
            }
        // {L1, L2} = L3 under the declared convention.
        EXPECT_NEAR(B(1, 2), F[3].value(z), 1e-13);
    }
}

namespace {

std::string random_cubic(std::mt19937_64& rng, const std::vector<std::string>& v) {
    std::uniform_int_distribution<std::size_t> var(0, v.size() - 1);
    std::uniform_int_distribution<int> deg(1, 3);
    std::uniform_real_distribution<double> c(-1, 1);
    std::string s = "0";
    for (int t = 0; t < 5; ++t) {
        s += " + (" + std::to_string(c(rng)) + ")";
        for (int d = deg(rng); d > 0; --d) s += "*" + v[var(rng)];
    }
    return s;
}

/// Gradient of {G, H} from the second-order jets of G and H:
/// d(dH . W dG) = Hess H W dG + Hess G W^T dH.
Vec bracket_gradient(const expr::Expression& G, const expr::Expression& H, const Vec& z, const Mat& W) {
    const auto g = G.jet2(z), h = H.jet2(z);
    return h.hessian * (W * g.gradient) + g.hessian * (W.transpose() * h.gradient);
}

}  // namespace

TEST(PoissonProperty, JacobiIdentity) {
    const auto chart = SymplecticChart::canonical(2);
    const Mat& W = chart.omega();
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int trial = 0; trial < 30; ++trial) {
        const auto F = expr::parse(random_cubic(rng, chart.names()), chart.names());
        const auto G = expr::parse(random_cubic(rng, chart.names()), chart.names());
        const auto H = expr::parse(random_cubic(rng, chart.names()), chart.names());
        Vec z(4);
        for (auto& x : z) x = u(rng);
        // {A, {B, C}} = d{B,C} . X_A
        auto outer = [&](const expr::Expression& A, const expr::Expression& B, const expr::Expression& C) {
            return bracket_gradient(B, C, z, W).dot(W * A.jet1(z).gradient);
        };
        const double jacobi = outer(F, G, H) + outer(G, H, F) + outer(H, F, G);
        EXPECT_LT(std::abs(jacobi), 1e-9);
    }
}

TEST(PoissonProperty, AntisymmetryAndLeibniz) {
    const auto chart = SymplecticChart::canonical(2);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int trial = 0; trial < 30; ++trial) {
        const std::string fs = random_cubic(rng, chart.names()), gs = random_cubic(rng, chart.names()),
                          hs = random_cubic(rng, chart.names());
        const auto F = expr::parse(fs, chart.names()), G = expr::parse(gs, chart.names()),
                   H = expr::parse(hs, chart.names());
        const auto GH = expr::parse("(" + gs + ")*(" + hs + ")", chart.names());
        Vec z(4);
        for (auto& x : z) x = u(rng);
        const double fg = symp::poisson_bracket(F, G, z, chart), gf = symp::poisson_bracket(G, F, z, chart);
        EXPECT_LE(std::abs(fg + gf), 1e-14);
        const double lhs = symp::poisson_bracket(F, GH, z, chart);
        const double rhs = G.value(z) * symp::poisson_bracket(F, H, z, chart) + H.value(z) * fg;
        EXPECT_LT(std::abs(lhs - rhs), 1e-10);
        // {F, G} = dG(X_F)
        const Vec XF = symp::hamiltonian_field(F, chart)(z);
        EXPECT_LT(std::abs(fg - G.jet1(z).gradient.dot(XF)), 1e-12);
    }
}

TEST(LieBracket, WorkedExamples) {
    const std::vector<std::string> c{"x", "y"};
    const auto dx = VectorField::constant(point({1, 0}));
    const auto dy = VectorField::constant(point({0, 1}));
    const auto xdy = VectorField::from_expressions(parse_all({"0", "x"}, c));
    const Vec z = point({0.4, -2});
    EXPECT_EQ(symp::lie_bracket(dx, xdy, z), point({0, 1}));
    EXPECT_EQ(symp::lie_bracket(xdy, xdy, z), Vec::Zero(2));
    EXPECT_EQ(symp::lie_bracket(dx, dy, z), Vec::Zero(2));
}

TEST(LieDerivative, WorkedExamples) {
    const std::vector<std::string> c{"x", "y"};
    const auto dx_form = CovectorField::from_expressions(parse_all({"1", "0"}, c));
    const auto dx = VectorField::constant(point({1, 0}));
    const auto xdx = VectorField::from_expressions(parse_all({"x", "0"}, c));
    const Vec z = point({1.7, 0.2});
    EXPECT_EQ(symp::lie_derivative_oneform(dx, dx_form, z), Vec::Zero(2));
    EXPECT_EQ(symp::lie_derivative_oneform(xdx, dx_form, z), point({1, 0}));
}

TEST(LieDerivative, CommutesWithExteriorDerivative) {
    // L_X dF = d(X(F)); X(F) is written out by hand for the oracle.
    const std::vector<std::string> c{"x", "y"};
    const auto F = expr::parse("x^2*y + sin(y)", c);
    const auto X = VectorField::from_expressions(parse_all({"y", "x*y"}, c));
    const auto XF = expr::parse("y*(2*x*y) + x*y*(x^2 + cos(y))", c);
    const auto dF = CovectorField::from_expressions(parse_all({"2*x*y", "x^2 + cos(y)"}, c));
    const Vec z = point({0.3, -1.2});
    EXPECT_LT((symp::lie_derivative_oneform(X, dF, z) - XF.jet1(z).gradient).norm(), 1e-13);
}
