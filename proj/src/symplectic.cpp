#include "integ/symplectic.hpp"

#include "integ/errors.hpp"

namespace integ::symp {

SymplecticChart::SymplecticChart(std::size_t n, std::vector<std::string> names)
    : n_(n), names_(std::move(names)) {
    if (n == 0) throw PreconditionError("symplectic chart needs n >= 1");
    if (names_.size() != 2 * n)
        throw PreconditionError("symplectic chart needs 2n coordinate names");
    const auto N = static_cast<Eigen::Index>(n);
    omega_ = Mat::Zero(2 * N, 2 * N);
    omega_.topRightCorner(N, N) = Mat::Identity(N, N);
    omega_.bottomLeftCorner(N, N) = -Mat::Identity(N, N);
}

SymplecticChart SymplecticChart::canonical(std::size_t n) {
    std::vector<std::string> names;
    for (std::size_t i = 1; i <= n; ++i) names.push_back("p" + std::to_string(i));
    for (std::size_t i = 1; i <= n; ++i) names.push_back("q" + std::to_string(i));
    return SymplecticChart(n, std::move(names));
}

VectorField hamiltonian_field(const expr::Expression& F, const SymplecticChart& chart) {
    if (F.dimension() != chart.dimension())
        throw PreconditionError("function and chart dimensions differ");
    const Mat W = chart.omega();
    return VectorField(
        chart.dimension(), [F, W](const Vec& z) -> Vec { return W * F.jet1(z).gradient; },
        [F, W](const Vec& z) -> Mat { return W * F.jet2(z).hessian; });
}

double poisson_bracket(const expr::Expression& F, const expr::Expression& G, const Vec& z,
                       const SymplecticChart& chart) {
    const Vec dF = F.jet1(z).gradient;
    const Vec dG = G.jet1(z).gradient;
    return dG.dot(chart.sharp(dF));
}

Mat bracket_matrix(const std::vector<expr::Expression>& F, const Vec& z,
                   const SymplecticChart& chart) {
    const auto k = static_cast<Eigen::Index>(F.size());
    Mat grads(z.size(), k);
    for (Eigen::Index i = 0; i < k; ++i) grads.col(i) = F[static_cast<std::size_t>(i)].jet1(z).gradient;
    // B(i, j) = dF_j . W dF_i; B = (W G)^T G = -G^T W G for antisymmetric W,
    // evaluated entry-wise so that B(i, j) = -B(j, i) exactly.
    Mat B = Mat::Zero(k, k);
    const Mat X = chart.omega() * grads;
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = i + 1; j < k; ++j) {
            B(i, j) = grads.col(j).dot(X.col(i));
            B(j, i) = -B(i, j);
        }
    return B;
}

Vec lie_bracket(const VectorField& X, const VectorField& Y, const Vec& z) {
    if (X.dimension() != Y.dimension()) throw PreconditionError("lie_bracket: dimension mismatch");
    return Y.jacobian(z) * X(z) - X.jacobian(z) * Y(z);
}

Vec lie_derivative_oneform(const VectorField& X, const CovectorField& alpha, const Vec& z) {
    if (X.dimension() != alpha.components.dimension())
        throw PreconditionError("lie_derivative_oneform: dimension mismatch");
    return alpha.components.jacobian(z) * X(z) + X.jacobian(z).transpose() * alpha.components(z);
}

}  // namespace integ::symp
