#include "integ/affine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "integ/errors.hpp"

namespace integ::affine {

namespace {

struct Solved {
    Mat A;
    Mat pinv;
    Vec b;
};

Solved solve_frame(const ConnectionFrame& frame, const Vec& y, const Vec& z) {
    Solved s;
    s.A = frame.matrix(z);
    Eigen::JacobiSVD<Mat> svd(s.A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec& sv = svd.singularValues();
    if (sv.size() == 0 || !(sv[sv.size() - 1] > 1e-10 * std::max(1.0, sv[0])))
        throw DegenerateJacobianError("frame is not independent at the point");
    s.pinv = svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
    s.b = s.pinv * y;
    const double residual = (s.A * s.b - y).norm();
    if (residual > kSpanTolerance * std::max(1.0, y.norm()))
        throw SpanViolationError("field is not in the span of the frame (residual " +
                                     std::to_string(residual) + ")",
                                 residual);
    return s;
}

Mat coefficient_jacobian(const ConnectionFrame& frame, const Solved& s, const Mat& JY, const Vec& z) {
    Mat rhs = JY;
    for (std::size_t j = 0; j < frame.m(); ++j) rhs -= s.b[static_cast<Eigen::Index>(j)] * frame.fields[j].jacobian(z);
    return s.pinv * rhs;
}

/// z -> nabla_Y Z (z), with a fourth-order central-difference Jacobian.
VectorField covariant_field(const ConnectionFrame& frame, const VectorField& Y, const VectorField& Z) {
    auto value = [frame, Y, Z](const Vec& z) { return nabla(frame, Y, Z, z); };
    auto jac = [value](const Vec& z) {
        Mat J(z.size(), z.size());
        Vec zp = z, zm = z;
        for (Eigen::Index k = 0; k < z.size(); ++k) {
            const double h = kCurvatureStep * std::max(1.0, std::abs(z[k]));
            zp[k] = z[k] + h;
            zm[k] = z[k] - h;
            const Vec d1 = value(zp) - value(zm);
            zp[k] = z[k] + 2 * h;
            zm[k] = z[k] - 2 * h;
            const Vec d2 = value(zp) - value(zm);
            J.col(k) = (8 * d1 - d2) / (12 * h);
            zp[k] = zm[k] = z[k];
        }
        return J;
    };
    return VectorField(Z.dimension(), value, jac);
}

}  // namespace

Mat ConnectionFrame::matrix(const Vec& z) const {
    Mat A(z.size(), static_cast<Eigen::Index>(fields.size()));
    for (std::size_t j = 0; j < fields.size(); ++j) A.col(static_cast<Eigen::Index>(j)) = fields[j](z);
    return A;
}

Vec frame_coefficients(const ConnectionFrame& frame, const Vec& y, const Vec& z) {
    return solve_frame(frame, y, z).b;
}

Vec frame_coefficients(const ConnectionFrame& frame, const VectorField& Y, const Vec& z) {
    return frame_coefficients(frame, Y(z), z);
}

Mat coefficient_jacobian(const ConnectionFrame& frame, const VectorField& Y, const Vec& z) {
    const Solved s = solve_frame(frame, Y(z), z);
    return coefficient_jacobian(frame, s, Y.jacobian(z), z);
}

Vec nabla(const ConnectionFrame& frame, const Vec& x, const VectorField& Y, const Vec& z) {
    const Solved s = solve_frame(frame, Y(z), z);
    return s.A * (coefficient_jacobian(frame, s, Y.jacobian(z), z) * x);
}

Vec nabla(const ConnectionFrame& frame, const VectorField& X, const VectorField& Y, const Vec& z) {
    return nabla(frame, X(z), Y, z);
}

Vec torsion(const ConnectionFrame& frame, std::size_t i, std::size_t j, const Vec& z) {
    if (i >= frame.m() || j >= frame.m()) throw PreconditionError("torsion: frame index out of range");
    const auto& Xi = frame.fields[i];
    const auto& Xj = frame.fields[j];
    return nabla(frame, Xi, Xj, z) - nabla(frame, Xj, Xi, z) - symp::lie_bracket(Xi, Xj, z);
}

Vec curvature(const ConnectionFrame& frame, const VectorField& X, const VectorField& Y,
              const VectorField& Z, const Vec& z) {
    const VectorField YZ = covariant_field(frame, Y, Z);
    const VectorField XZ = covariant_field(frame, X, Z);
    return nabla(frame, X, YZ, z) - nabla(frame, Y, XZ, z) - nabla(frame, symp::lie_bracket(X, Y, z), Z, z);
}

double geodesic_residual(const ConnectionFrame& frame, const VectorField& V, const Vec& start, double t,
                         const flows::IntegratorOptions& options) {
    if (t == 0) return 0;
    std::vector<flows::TrajectoryPoint> trajectory;
    flows::integrate(V, start, t, options, &trajectory);
    double worst = 0;
    for (const auto& p : trajectory) worst = std::max(worst, nabla(frame, V, V, p.x).norm());
    return worst;
}

double geodesic_residual(const ConnectionFrame& frame, std::size_t i, const Vec& start, double t,
                         const flows::IntegratorOptions& options) {
    if (i >= frame.m()) throw PreconditionError("geodesic_residual: frame index out of range");
    return geodesic_residual(frame, frame.fields[i], start, t, options);
}

Equivalence equivalence_check(const ConnectionFrame& a, const ConnectionFrame& b,
                              const std::vector<Vec>& samples, double tol) {
    if (a.m() != b.m()) throw PreconditionError("equivalence_check: frames of different size");
    Equivalence eq;
    if (samples.empty()) return eq;
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const Vec& z = samples[s];
        const Mat A = a.matrix(z);
        const Mat B = b.matrix(z);
        Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Mat G = svd.solve(B);
        if (s == 0) eq.G = G;
        else eq.variation = std::max(eq.variation, (G - eq.G).cwiseAbs().maxCoeff());
        // B must lie in the span of A at every sample.
        eq.variation = std::max(eq.variation, (A * G - B).cwiseAbs().maxCoeff());
    }
    Eigen::JacobiSVD<Mat> g(eq.G);
    const Vec& sv = g.singularValues();
    const bool invertible = sv.size() > 0 && sv[sv.size() - 1] > 1e-10 * std::max(1.0, sv[0]);
    eq.same = invertible && eq.variation < tol;
    return eq;
}

Transport parallel_transport(const ConnectionFrame& frame, const std::vector<Vec>& path, const Vec& v0,
                             const flows::IntegratorOptions& options) {
    if (path.empty()) throw PreconditionError("parallel_transport: empty path");
    Transport out;
    const Vec b0 = frame_coefficients(frame, v0, path.front());
    out.vector = frame.matrix(path.back()) * b0;

    const auto d = static_cast<Eigen::Index>(frame.dimension());
    Vec state(2 * d);
    state << path.front(), v0;
    for (std::size_t seg = 0; seg + 1 < path.size(); ++seg) {
        const Vec velocity = path[seg + 1] - path[seg];
        VectorField transport(static_cast<std::size_t>(2 * d), [&frame, velocity, d](const Vec& s) {
            const Vec z = s.head(d);
            const Solved sol = solve_frame(frame, s.tail(d), z);
            Vec rate = Vec::Zero(d);
            for (std::size_t j = 0; j < frame.m(); ++j)
                rate += sol.b[static_cast<Eigen::Index>(j)] * (frame.fields[j].jacobian(z) * velocity);
            Vec ds(2 * d);
            ds << velocity, rate;
            return ds;
        });
        state = flows::integrate(transport, state, 1.0, options);
        state.head(d) = path[seg + 1];  // pin the base point against drift
    }
    out.ode_vector = state.tail(d);
    out.discrepancy = (out.ode_vector - out.vector).norm();
    return out;
}

Vec omega_connection(const std::vector<expr::Expression>& F, const std::vector<VectorField>& fiber_frame,
                     const VectorField& X, const VectorField& Y, const Vec& z,
                     const symp::SymplecticChart& chart, double tol) {
    const Vec x = X(z), y = Y(z);
    for (std::size_t l = 0; l < F.size(); ++l) {
        const Vec dF = F[l].jet1(z).gradient;
        const double tx = std::abs(dF.dot(x)), ty = std::abs(dF.dot(y));
        if (tx > tol || ty > tol)
            throw PreconditionError("omega_connection: field not tangent to the fiber (|dF_" +
                                    std::to_string(l + 1) + "| = " + std::to_string(std::max(tx, ty)) + ")");
    }
    for (std::size_t i = 0; i < fiber_frame.size(); ++i)
        for (std::size_t j = i + 1; j < fiber_frame.size(); ++j) {
            const double w = std::abs(chart.pairing(fiber_frame[i](z), fiber_frame[j](z)));
            if (w > tol)
                throw PreconditionError("omega_connection: fiber is not isotropic (|Omega(X_" + std::to_string(i + 1) +
                                        ", X_" + std::to_string(j + 1) + ")| = " + std::to_string(w) + ")");
        }
    const Mat Wt = chart.omega().transpose();
    CovectorField alpha{VectorField(
        Y.dimension(), [Y, Wt](const Vec& p) -> Vec { return Wt * Y(p); },
        [Y, Wt](const Vec& p) -> Mat { return Wt * Y.jacobian(p); })};
    return chart.sharp(symp::lie_derivative_oneform(X, alpha, z));
}

std::vector<Vec> cartan_hadamard_chart(const flows::FlowAction& action, const std::vector<Vec>& targets,
                                       const fibergeom::PeriodLattice* lattice, const ChartOptions& options,
                                       Execution exec) {
    if (lattice && lattice->rank() > 0)
        throw PreconditionError("cartan_hadamard_chart: the action has periods (h = " +
                                std::to_string(lattice->rank()) + ")");
    const auto& X = action.fields();
    auto check_commuting = [&](const Vec& z) {
        for (std::size_t i = 0; i < X.size(); ++i)
            for (std::size_t j = i + 1; j < X.size(); ++j) {
                const double r = symp::lie_bracket(X[i], X[j], z).norm();
                if (r > options.commutation_tol)
                    throw PreconditionError("cartan_hadamard_chart: frame does not commute ([X_" +
                                            std::to_string(i + 1) + ", X_" + std::to_string(j + 1) +
                                            "] = " + std::to_string(r) + ")");
            }
    };
    check_commuting(action.base());
    for (const auto& t : targets) check_commuting(t);

    std::vector<Vec> out(targets.size());
    for_each_index(targets.size(), exec, [&](std::size_t k) {
        const Vec& target = targets[k];
        Vec t = Vec::Zero(static_cast<Eigen::Index>(action.m()));
        double res = (action(t) - target).norm();
        for (int it = 0; it < options.max_iterations && res >= options.tol; ++it) {
            const Vec z = action(t);
            const Mat A = action.frame_at(z);
            const Vec delta = A.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(z - target);
            double lambda = 1;
            for (int halving = 0; halving < 20; ++halving, lambda *= 0.5) {
                const Vec trial = t - lambda * delta;
                try {
                    const double r = (action(trial) - target).norm();
                    if (r < res || halving == 19) {
                        t = trial;
                        res = r;
                        break;
                    }
                } catch (const IntegrationError&) {
                }
            }
        }
        if (!(res < options.tol))
            throw NonConvergenceError("cartan_hadamard_chart: Newton did not converge for target " +
                                          std::to_string(k),
                                      res);
        out[k] = t;
    });
    return out;
}

}  // namespace integ::affine
