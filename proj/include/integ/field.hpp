#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "integ/expr.hpp"
#include "integ/types.hpp"

namespace integ {

/// A smooth vector field on a d-dimensional coordinate chart, given by its
/// components and (optionally) their exact Jacobian. Without an exact Jacobian
/// `jacobian()` falls back to central differences.
class VectorField {
public:
    using ValueFn = std::function<Vec(const Vec&)>;
    using JacobianFn = std::function<Mat(const Vec&)>;

    VectorField(std::size_t dimension, ValueFn value, JacobianFn jacobian = {});

    std::size_t dimension() const { return dim_; }
    Vec operator()(const Vec& z) const { return value_(z); }
    /// J(i, j) = d X^i / d z^j.
    Mat jacobian(const Vec& z) const;
    bool has_exact_jacobian() const { return static_cast<bool>(jacobian_); }

    /// Components given as expressions in the chart coordinates.
    static VectorField from_expressions(std::vector<expr::Expression> components);
    static VectorField constant(Vec v);
    static VectorField zero(std::size_t dimension);

private:
    std::size_t dim_;
    ValueFn value_;
    JacobianFn jacobian_;
};

/// Covector (one-form) field, stored component-wise like a vector field.
struct CovectorField {
    VectorField components;

    static CovectorField from_expressions(std::vector<expr::Expression> components) {
        return {VectorField::from_expressions(std::move(components))};
    }
};

/// Step used by the finite-difference Jacobian fallback.
inline constexpr double kFieldFdStep = 1e-6;

/// sum_j c_j(z) X_j(z) with scalar coefficient expressions c_j.
VectorField linear_combination(std::vector<expr::Expression> coefficients,
                               std::vector<VectorField> fields);

/// sum_j c_j X_j with constant coefficients.
VectorField linear_combination(const Vec& coefficients, std::vector<VectorField> fields);

VectorField operator+(const VectorField& a, const VectorField& b);
VectorField operator*(double s, const VectorField& a);

/// Directional derivative X(f) = df(X) of a scalar expression.
double directional_derivative(const expr::Expression& f, const VectorField& X, const Vec& z);

}  // namespace integ
