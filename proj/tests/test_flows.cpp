#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "integ/errors.hpp"
#include "integ/flows.hpp"
#include "integ/symplectic.hpp"
#include "support.hpp"

using namespace integ;
using namespace testsupport;
using flows::FlowAction;
using flows::IntegratorOptions;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

VectorField oscillator_field() { return symp::hamiltonian_field(oscillator(), symp::SymplecticChart(1, pq())); }

IntegratorOptions tol(double t) {
    IntegratorOptions o;
    o.tol = t;
    return o;
}

}  // namespace

TEST(Integrate, OscillatorReturnsAfterOnePeriod) {
    const Vec end = flows::integrate(oscillator_field(), v2(1, 0), kTwoPi, tol(1e-10));
    EXPECT_LT((end - v2(1, 0)).norm(), 1e-8);
}

TEST(Integrate, OscillatorMatchesClosedFormRotation) {
    // X_H = (q, -p): p(t) = p0 cos t + q0 sin t, q(t) = q0 cos t - p0 sin t.
    const Vec z0 = v2(0.3, -1.2);
    for (double t : {0.5, -2.0, 7.3}) {
        const Vec end = flows::integrate(oscillator_field(), z0, t, tol(1e-12));
        const Vec exact = v2(z0[0] * std::cos(t) + z0[1] * std::sin(t), z0[1] * std::cos(t) - z0[0] * std::sin(t));
        EXPECT_LT((end - exact).norm(), 1e-10) << t;
    }
}

TEST(Integrate, FreeParticleTranslates) {
    const auto X = symp::hamiltonian_field(expr::parse("p", pq()), symp::SymplecticChart(1, pq()));
    const Vec end = flows::integrate(X, v2(1, 0), 3.0);
    EXPECT_LT((end - v2(1, -3)).norm(), 1e-12);
}

TEST(Integrate, ZeroTimeIsExactIdentity) {
    const Vec z = v2(0.123456789, -9.87654321);
    EXPECT_EQ(flows::integrate(oscillator_field(), z, 0.0), z);
}

TEST(Integrate, HorizonIsEnforced) {
    EXPECT_THROW(flows::integrate(oscillator_field(), v2(1, 0), 101.0), PreconditionError);
}

TEST(Integrate, BlowupOfQuadraticField) {
    const auto X = VectorField::from_expressions({expr::parse("x^2", {"x"})});
    try {
        flows::integrate(X, Vec::Ones(1), 2.0);
        FAIL();
    } catch (const BlowupError& e) {
        EXPECT_NEAR(e.time_reached(), 1.0, 1e-3);
    }
}

TEST(Integrate, EnergyDriftOverLongHorizon) {
    const auto H = oscillator();
    std::vector<flows::TrajectoryPoint> traj;
    flows::integrate(oscillator_field(), v2(1, 0.5), 100.0, tol(1e-10), &traj);
    double drift = 0;
    for (const auto& p : traj) drift = std::max(drift, std::abs(H.value(p.x) - 0.625));
    EXPECT_LT(drift, 1e-6);
    EXPECT_EQ(traj.front().t, 0.0);
    EXPECT_EQ(traj.back().t, 100.0);
}

TEST(Integrate, SamplesLandOnRequestedTimes) {
    const std::vector<double> times{-0.5, -1.0, -3.0};
    const auto states = flows::integrate_samples(oscillator_field(), v2(1, 0), times, tol(1e-12));
    ASSERT_EQ(states.size(), 3u);
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        EXPECT_LT((states[i] - v2(std::cos(t), -std::sin(t))).norm(), 1e-10);
    }
    const std::vector<double> bad{1.0, 0.5};
    EXPECT_THROW(flows::integrate_samples(oscillator_field(), v2(1, 0), bad), PreconditionError);
}

TEST(Convergence, ReturnErrorShrinksWithTolerance) {
    std::vector<double> errors;
    for (double t : {1e-6, 1e-8, 1e-10}) {
        const Vec end = flows::integrate(oscillator_field(), v2(1, 0), kTwoPi, tol(t));
        errors.push_back((end - v2(1, 0)).norm());
    }
    EXPECT_GE(errors[0] / errors[1], 4.0);
    EXPECT_GE(errors[1] / errors[2], 4.0);
}

TEST(FlowCompose, IdentityAndPeriods) {
    const auto chart = symp::SymplecticChart::canonical(2);
    const auto F = parse_all({"(p1^2 + q1^2)/2", "(p2^2 + q2^2)/2"}, chart.names());
    const Vec base = (Vec(4) << 1, 0.5, 0, -0.3).finished();
    const FlowAction action({symp::hamiltonian_field(F[0], chart), symp::hamiltonian_field(F[1], chart)}, base,
                            tol(1e-12));
    EXPECT_EQ(flows::flow_compose(action, Vec::Zero(2)), base);
    EXPECT_LT((flows::flow_compose(action, Vec::Constant(2, kTwoPi)) - base).norm(), 1e-7);
}

TEST(FlowCompose, ActionProperty) {
    const auto chart = symp::SymplecticChart::canonical(2);
    const auto F = two_oscillators();
    const Vec base = (Vec(4) << 1, 0.5, 0, -0.3).finished();
    const FlowAction action({symp::hamiltonian_field(F[0], chart), symp::hamiltonian_field(F[1], chart)}, base,
                            tol(1e-12));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 10; ++i) {
        const Vec t = (Vec(2) << u(rng), u(rng)).finished(), s = (Vec(2) << u(rng), u(rng)).finished();
        EXPECT_LT((action(t + s) - action.apply(action(s), t)).norm(), 1e-7);
    }
}

TEST(FlowCompose, LegOrderIndependenceForInvolutiveSystem) {
    const auto chart = symp::SymplecticChart::canonical(3);
    const auto F = central_field();
    // H and L3 commute.
    const Vec base = (Vec(6) << 0.1, 0.9, -0.2, 1.0, 0.1, 0.3).finished();
    const auto XH = symp::hamiltonian_field(F[0], chart), XL = symp::hamiltonian_field(F[3], chart);
    const FlowAction forward({XH, XL}, base, tol(1e-12)), backward({XL, XH}, base, tol(1e-12));
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 5; ++i) {
        const double a = u(rng), b = u(rng);
        EXPECT_LT((forward((Vec(2) << a, b).finished()) - backward((Vec(2) << b, a).finished())).norm(), 1e-6);
    }
}

TEST(FlowCompose, LegIndexIsAttachedToErrors) {
    const std::vector<std::string> c{"x", "y"};
    const FlowAction action({VectorField::from_expressions(parse_all({"0", "1"}, c)),
                             VectorField::from_expressions(parse_all({"x^2", "0"}, c))},
                            v2(1, 0));
    try {
        action(v2(0.5, 3.0));
        FAIL();
    } catch (const IntegrationError& e) {
        ASSERT_TRUE(e.leg.has_value());
        EXPECT_EQ(*e.leg, 1u);
    }
}

TEST(Commutation, WorkedExamples) {
    const std::vector<std::string> c{"x", "y"};
    const auto dx = VectorField::constant(v2(1, 0)), dy = VectorField::constant(v2(0, 1));
    EXPECT_LT(flows::commutation_residual(dx, dy, v2(0.3, 0.4), 1.5, -2.0), 1e-12);
    const auto xdy = VectorField::from_expressions(parse_all({"0", "x"}, c));
    EXPECT_NEAR(flows::commutation_residual(dx, xdy, v2(0, 0), 1.0, 1.0), 1.0, 1e-6);

    const auto chart = symp::SymplecticChart::canonical(2);
    const auto F = two_oscillators();
    const auto X1 = symp::hamiltonian_field(F[0], chart), X2 = symp::hamiltonian_field(F[1], chart);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int i = 0; i < 5; ++i) {
        const Vec z = (Vec(4) << u(rng), u(rng), u(rng), u(rng)).finished();
        EXPECT_LT(flows::commutation_residual(X1, X2, z, 0.5, 0.5, tol(1e-12)), 1e-6);
    }
}

TEST(Completeness, WorkedExamples) {
    const std::vector<Vec> pts{v2(1, 0), v2(-0.5, 2)};
    for (const auto& v : flows::completeness_probe(oscillator_field(), pts, 100, 1e8))
        EXPECT_EQ(v.label(), "no-blowup-within-horizon");
    const auto quad = VectorField::from_expressions({expr::parse("x^2", {"x"})});
    const auto blow = flows::completeness_probe(quad, {Vec::Ones(1)}, 2, 1e8);
    ASSERT_TRUE(blow[0].blowup);
    EXPECT_NEAR(blow[0].blowup_time, 1.0, 1e-3);
    EXPECT_NE(blow[0].label().find("blowup-detected"), std::string::npos);
    for (const auto& v : flows::completeness_probe(VectorField::zero(2), pts, 100, 1e8)) EXPECT_FALSE(v.blowup);
}

TEST(Completeness, SerialAndParallelAgree) {
    const auto quad = VectorField::from_expressions({expr::parse("x^2 - 1", {"x"})});
    std::vector<Vec> pts;
    for (int i = 0; i < 12; ++i) pts.push_back(Vec::Constant(1, -2.0 + 0.37 * i));
    const auto a = flows::completeness_probe(quad, pts, 5, 1e8, {}, Execution::Serial);
    const auto b = flows::completeness_probe(quad, pts, 5, 1e8, {}, Execution::Parallel);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].blowup, b[i].blowup);
        EXPECT_EQ(a[i].blowup_time, b[i].blowup_time);
    }
}

TEST(TrajectoryCsv, HeaderAndRows) {
    std::vector<flows::TrajectoryPoint> traj;
    flows::integrate(oscillator_field(), v2(1, 0), 1.0, {}, &traj);
    std::ostringstream out;
    flows::write_trajectory_csv(out, traj);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "t,x1,x2");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, traj.size());
}
