#include "integ/field.hpp"

#include <memory>

#include "integ/errors.hpp"

namespace integ {

VectorField::VectorField(std::size_t dimension, ValueFn value, JacobianFn jacobian)
    : dim_(dimension), value_(std::move(value)), jacobian_(std::move(jacobian)) {}

Mat VectorField::jacobian(const Vec& z) const {
    if (jacobian_) return jacobian_(z);
    const auto d = static_cast<Eigen::Index>(dim_);
    Mat J(d, z.size());
    Vec zp = z, zm = z;
    for (Eigen::Index j = 0; j < z.size(); ++j) {
        const double h = kFieldFdStep * std::max(1.0, std::abs(z[j]));
        zp[j] = z[j] + h;
        zm[j] = z[j] - h;
        J.col(j) = (value_(zp) - value_(zm)) / (2 * h);
        zp[j] = zm[j] = z[j];
    }
    return J;
}

VectorField VectorField::from_expressions(std::vector<expr::Expression> components) {
    if (components.empty()) throw PreconditionError("vector field needs at least one component");
    const std::size_t d = components.size();
    for (const auto& c : components)
        if (c.dimension() != d)
            throw PreconditionError("component count must equal chart dimension");
    auto comps = std::make_shared<const std::vector<expr::Expression>>(std::move(components));
    return VectorField(
        d,
        [comps](const Vec& z) {
            Vec v(static_cast<Eigen::Index>(comps->size()));
            for (std::size_t i = 0; i < comps->size(); ++i)
                v[static_cast<Eigen::Index>(i)] = (*comps)[i].value(z);
            return v;
        },
        [comps](const Vec& z) {
            Mat J(static_cast<Eigen::Index>(comps->size()), z.size());
            for (std::size_t i = 0; i < comps->size(); ++i)
                J.row(static_cast<Eigen::Index>(i)) = (*comps)[i].jet1(z).gradient.transpose();
            return J;
        });
}

VectorField VectorField::constant(Vec v) {
    const auto d = static_cast<std::size_t>(v.size());
    return VectorField(
        d, [v](const Vec&) { return v; },
        [d](const Vec& z) { return Mat::Zero(static_cast<Eigen::Index>(d), z.size()); });
}

VectorField VectorField::zero(std::size_t dimension) {
    return constant(Vec::Zero(static_cast<Eigen::Index>(dimension)));
}

VectorField linear_combination(std::vector<expr::Expression> coefficients,
                               std::vector<VectorField> fields) {
    if (coefficients.size() != fields.size() || fields.empty())
        throw PreconditionError("linear_combination: coefficient/field count mismatch");
    const std::size_t d = fields.front().dimension();
    auto coefs = std::make_shared<const std::vector<expr::Expression>>(std::move(coefficients));
    auto fs = std::make_shared<const std::vector<VectorField>>(std::move(fields));
    bool exact = true;
    for (const auto& f : *fs) exact = exact && f.has_exact_jacobian();
    VectorField::ValueFn value = [coefs, fs, d](const Vec& z) {
        Vec v = Vec::Zero(static_cast<Eigen::Index>(d));
        for (std::size_t j = 0; j < fs->size(); ++j) v += (*coefs)[j].value(z) * (*fs)[j](z);
        return v;
    };
    if (!exact) return VectorField(d, value);
    return VectorField(d, value, [coefs, fs, d](const Vec& z) {
        Mat J = Mat::Zero(static_cast<Eigen::Index>(d), z.size());
        for (std::size_t j = 0; j < fs->size(); ++j) {
            const auto c = (*coefs)[j].jet1(z);
            J += c.value * (*fs)[j].jacobian(z);
            J.noalias() += (*fs)[j](z) * c.gradient.transpose();
        }
        return J;
    });
}

VectorField linear_combination(const Vec& coefficients, std::vector<VectorField> fields) {
    if (static_cast<std::size_t>(coefficients.size()) != fields.size() || fields.empty())
        throw PreconditionError("linear_combination: coefficient/field count mismatch");
    const std::size_t d = fields.front().dimension();
    auto fs = std::make_shared<const std::vector<VectorField>>(std::move(fields));
    bool exact = true;
    for (const auto& f : *fs) exact = exact && f.has_exact_jacobian();
    VectorField::ValueFn value = [coefficients, fs, d](const Vec& z) {
        Vec v = Vec::Zero(static_cast<Eigen::Index>(d));
        for (std::size_t j = 0; j < fs->size(); ++j)
            v += coefficients[static_cast<Eigen::Index>(j)] * (*fs)[j](z);
        return v;
    };
    if (!exact) return VectorField(d, value);
    return VectorField(d, value, [coefficients, fs, d](const Vec& z) {
        Mat J = Mat::Zero(static_cast<Eigen::Index>(d), z.size());
        for (std::size_t j = 0; j < fs->size(); ++j)
            J += coefficients[static_cast<Eigen::Index>(j)] * (*fs)[j].jacobian(z);
        return J;
    });
}

VectorField operator+(const VectorField& a, const VectorField& b) {
    return linear_combination(Vec::Ones(2), {a, b});
}

VectorField operator*(double s, const VectorField& a) {
    return linear_combination(Vec::Constant(1, s), {a});
}

double directional_derivative(const expr::Expression& f, const VectorField& X, const Vec& z) {
    return f.jet1(z).gradient.dot(X(z));
}

}  // namespace integ
