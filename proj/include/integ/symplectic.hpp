#pragma once

// Canonical symplectic structure on R^{2n} in coordinates ordered
// (p_1..p_n, q_1..q_n), with Omega = sum dp ^ dq.
//
// Conventions:
//   X_F is defined by Omega(X_F, .) = dF, so X_F = (dF/dq) d_p - (dF/dp) d_q.
//   {F, G} = dG(X_F) = X_F(G), which gives {q, p} = +1.

#include <cstddef>
#include <string>
#include <vector>

#include "integ/expr.hpp"
#include "integ/field.hpp"

namespace integ::symp {

class SymplecticChart {
public:
    /// `names` must list the n momenta followed by the n positions.
    SymplecticChart(std::size_t n, std::vector<std::string> names);
    /// Chart with names p1..pn, q1..qn.
    static SymplecticChart canonical(std::size_t n);

    std::size_t n() const { return n_; }
    std::size_t dimension() const { return 2 * n_; }
    const std::vector<std::string>& names() const { return names_; }

    /// Constant matrix W with Omega(u, v) = u^T W v.
    const Mat& omega() const { return omega_; }
    double pairing(const Vec& u, const Vec& v) const { return u.dot(omega_ * v); }
    /// Omega-flat: v -> Omega(v, .).
    Vec flat(const Vec& v) const { return omega_.transpose() * v; }
    /// Omega-sharp: inverse of flat.
    Vec sharp(const Vec& alpha) const { return omega_ * alpha; }

private:
    std::size_t n_;
    std::vector<std::string> names_;
    Mat omega_;
};

VectorField hamiltonian_field(const expr::Expression& F, const SymplecticChart& chart);

double poisson_bracket(const expr::Expression& F, const expr::Expression& G, const Vec& z,
                       const SymplecticChart& chart);

/// {F_i, F_j} for all pairs, from one jet evaluation per function.
Mat bracket_matrix(const std::vector<expr::Expression>& F, const Vec& z,
                   const SymplecticChart& chart);

/// [X, Y]^k = X(Y^k) - Y(X^k).
Vec lie_bracket(const VectorField& X, const VectorField& Y, const Vec& z);

/// (L_X alpha)_k = X^j d_j alpha_k + alpha_j d_k X^j.
Vec lie_derivative_oneform(const VectorField& X, const CovectorField& alpha, const Vec& z);

}  // namespace integ::symp
