#pragma once

// The flat connection of a parallelization {X_1..X_m}: for Y = b^j X_j,
// nabla_X Y = X(b^j) X_j. Also its torsion, curvature, geodesics and parallel
// transport, the symplectic connection Omega# L_X Omega_flat(Y) on isotropic
// fibers, and the inverse of the flow action (Cartan-Hadamard chart).

#include <cstddef>
#include <optional>
#include <vector>

#include "integ/expr.hpp"
#include "integ/fibergeom.hpp"
#include "integ/field.hpp"
#include "integ/flows.hpp"
#include "integ/parallel.hpp"
#include "integ/sampling.hpp"
#include "integ/symplectic.hpp"

namespace integ::affine {

struct ConnectionFrame {
    std::vector<VectorField> fields;
    Box domain;

    std::size_t m() const { return fields.size(); }
    std::size_t dimension() const { return fields.empty() ? 0 : fields.front().dimension(); }
    /// d x m matrix with columns X_j(z).
    Mat matrix(const Vec& z) const;
};

/// Residual above which Y is not in the span of the frame.
inline constexpr double kSpanTolerance = 1e-8;

/// Solves Y(z) = b^j X_j(z) in the least-squares sense. Throws
/// DegenerateJacobianError for a dependent frame and SpanViolationError when
/// the residual exceeds kSpanTolerance (scaled by max(1, |Y|)).
Vec frame_coefficients(const ConnectionFrame& frame, const VectorField& Y, const Vec& z);
Vec frame_coefficients(const ConnectionFrame& frame, const Vec& y, const Vec& z);

/// Jacobian db^j/dz^k (m x d) of the coefficients of Y, from implicit
/// differentiation of X b = Y: db = A^+ (J_Y - sum_j b^j J_{X_j}).
Mat coefficient_jacobian(const ConnectionFrame& frame, const VectorField& Y, const Vec& z);

/// nabla_X Y at z. Tensorial in X, so only X(z) is needed.
Vec nabla(const ConnectionFrame& frame, const Vec& x, const VectorField& Y, const Vec& z);
Vec nabla(const ConnectionFrame& frame, const VectorField& X, const VectorField& Y, const Vec& z);

/// nabla_{X_i} X_j - nabla_{X_j} X_i - [X_i, X_j].
Vec torsion(const ConnectionFrame& frame, std::size_t i, std::size_t j, const Vec& z);

/// Step of the fourth-order central differences used for the second covariant derivative.
inline constexpr double kCurvatureStep = 1e-3;

/// R(X, Y) Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z.
Vec curvature(const ConnectionFrame& frame, const VectorField& X, const VectorField& Y,
              const VectorField& Z, const Vec& z);

/// max |nabla_V V| over the accepted integrator steps of the integral curve
/// of V from `start` up to time t.
double geodesic_residual(const ConnectionFrame& frame, const VectorField& V, const Vec& start,
                         double t, const flows::IntegratorOptions& options = {});
double geodesic_residual(const ConnectionFrame& frame, std::size_t i, const Vec& start, double t,
                         const flows::IntegratorOptions& options = {});

struct Equivalence {
    bool same = false;
    /// B_j = G(i, j) A_i, taken from the first sample.
    Mat G;
    /// max |G(sample) - G(first sample)| over samples.
    double variation = 0;
};

Equivalence equivalence_check(const ConnectionFrame& a, const ConnectionFrame& b,
                              const std::vector<Vec>& samples, double tol = 1e-8);

struct Transport {
    /// Frame coefficients carried unchanged to the end point.
    Vec vector;
    /// Integration of dV/ds = sum_j (A^+ V)_j J_{X_j} gamma' along the path.
    Vec ode_vector;
    double discrepancy = 0;
};

/// Parallel transport of v0 (tangent to the frame at path.front()) along a
/// polygonal path.
Transport parallel_transport(const ConnectionFrame& frame, const std::vector<Vec>& path,
                             const Vec& v0, const flows::IntegratorOptions& options = {.tol = 1e-12});

/// Omega# L_X Omega_flat(Y) at z. X and Y must be tangent to the fiber of F
/// through z and the fiber frame must be isotropic there (both within `tol`),
/// else PreconditionError.
Vec omega_connection(const std::vector<expr::Expression>& F, const std::vector<VectorField>& fiber_frame,
                     const VectorField& X, const VectorField& Y, const Vec& z,
                     const symp::SymplecticChart& chart, double tol = 1e-8);

struct ChartOptions {
    int max_iterations = 50;
    double tol = 1e-10;
    /// Commutation precondition on [X_i, X_j].
    double commutation_tol = 1e-8;
};

/// t with Phi(t) = target for each target: the inverse chart of a commuting
/// complete frame without periods. Rejects non-commuting frames (checked at
/// the base point and the targets) and a lattice with h > 0.
std::vector<Vec> cartan_hadamard_chart(const flows::FlowAction& action, const std::vector<Vec>& targets,
                                       const fibergeom::PeriodLattice* lattice = nullptr,
                                       const ChartOptions& options = {},
                                       Execution exec = Execution::Parallel);

}  // namespace integ::affine
