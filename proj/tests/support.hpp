#pragma once

// Shared fixtures: the catalog systems as expressions, and small oracles that
// deliberately avoid the library code paths they check.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "integ/expr.hpp"
#include "integ/sampling.hpp"
#include "integ/symplectic.hpp"

namespace testsupport {

using integ::Mat;
using integ::Vec;
using integ::expr::Expression;

inline constexpr double kTwoPi = 2 * std::numbers::pi;

inline std::vector<Expression> parse_all(const std::vector<std::string>& sources,
                                         const std::vector<std::string>& coords) {
    std::vector<Expression> out;
    for (const auto& s : sources) out.push_back(integ::expr::parse(s, coords));
    return out;
}

inline const std::vector<std::string>& pq() {
    static const std::vector<std::string> c{"p", "q"};
    return c;
}
inline const std::vector<std::string>& pq2() {
    static const std::vector<std::string> c{"p1", "p2", "q1", "q2"};
    return c;
}
inline const std::vector<std::string>& pq3() {
    static const std::vector<std::string> c{"p1", "p2", "p3", "q1", "q2", "q3"};
    return c;
}

inline Expression oscillator() { return integ::expr::parse("(p^2 + q^2)/2", pq()); }

inline std::vector<Expression> two_oscillators() {
    return parse_all({"(p1^2 + q1^2)/2", "(p2^2 + 4*q2^2)/2"}, pq2());
}

inline std::vector<Expression> cylinder() { return parse_all({"p1", "(p2^2 + q2^2)/2"}, pq2()); }

inline const char* central_potential() {
    return "(p1^2 + p2^2 + p3^2)/2 + (q1^2 + q2^2 + q3^2)^2/4 + (q1^2 + q2^2 + q3^2)/2";
}

/// (H, L1, L2, L3) with L = q x p.
inline std::vector<Expression> central_field() {
    return parse_all({central_potential(), "q2*p3 - q3*p2", "q3*p1 - q1*p3", "q1*p2 - q2*p1"}, pq3());
}

inline std::vector<std::string> central_base() { return {"h", "l1", "l2", "l3"}; }

inline integ::Box cube(std::size_t d, double r) {
    return {Vec::Constant(static_cast<Eigen::Index>(d), -r), Vec::Constant(static_cast<Eigen::Index>(d), r)};
}

/// Central-difference gradient of a scalar expression, independent of the jets.
inline Vec fd_gradient(const Expression& e, const Vec& z, double h) {
    Vec g(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        Vec a = z, b = z;
        a[i] += h;
        b[i] -= h;
        g[i] = (e.value(a) - e.value(b)) / (2 * h);
    }
    return g;
}

inline Mat fd_hessian(const Expression& e, const Vec& z, double h) {
    Mat H(z.size(), z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i)
        for (Eigen::Index j = 0; j < z.size(); ++j) {
            auto f = [&](double si, double sj) {
                Vec w = z;
                w[i] += si * h;
                w[j] += sj * h;
                return e.value(w);
            };
            H(i, j) = (f(1, 1) - f(1, -1) - f(-1, 1) + f(-1, -1)) / (4 * h * h);
        }
    return H;
}

/// Hand-written canonical bracket {F,G} = sum_l dF/dq_l dG/dp_l - dF/dp_l dG/dq_l from
/// gradients alone; the library's matrix-based path is not used.
inline double bracket_oracle(const Vec& dF, const Vec& dG) {
    const Eigen::Index n = dF.size() / 2;
    double s = 0;
    for (Eigen::Index l = 0; l < n; ++l) s += dF[n + l] * dG[l] - dF[l] * dG[n + l];
    return s;
}

/// Oscillator level loop p = R cos s, q = R sin s: brute-force (1/2pi) int p dq by the
/// midpoint rule at `nodes` nodes.
inline double oscillator_action_oracle(double E, int nodes) {
    const double R = std::sqrt(2 * E);
    double sum = 0;
    for (int i = 0; i < nodes; ++i) {
        const double s = kTwoPi * (i + 0.5) / nodes;
        sum += (R * std::cos(s)) * (R * std::cos(s)) * (kTwoPi / nodes);
    }
    return sum / kTwoPi;
}

}  // namespace testsupport
