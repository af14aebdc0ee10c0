#pragma once

// Geometry of a single invariant fiber: the period lattice of the R^m flow
// action, the resulting R^{m-h} x T^h classification, loop action integrals
// and a numerical action-angle chart with its Darboux residual.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "integ/expr.hpp"
#include "integ/field.hpp"
#include "integ/flows.hpp"
#include "integ/parallel.hpp"
#include "integ/symplectic.hpp"

namespace integ::fibergeom {

struct LatticeOptions {
    double radius = 10;
    double grid_step = 0.05;
    /// Newton stops once |Phi(t) - base| drops below this.
    double newton_tol = 1e-10;
    /// Refined candidates with a larger residual are discarded.
    double return_tol = 1e-8;
    int max_newton = 30;
    flows::IntegratorOptions integrator{.tol = 1e-12, .blowup_bound = 1e8, .horizon = 100, .max_steps = 5'000'000};
};

struct PeriodLattice {
    std::size_t m = 0;
    std::vector<Vec> basis;
    std::vector<double> residuals;
    double search_radius = 0;
    double grid_step = 0;
    std::size_t candidates = 0;
    std::string note;

    std::size_t rank() const { return basis.size(); }
    /// Basis vectors as columns (m x h).
    Mat matrix() const;
};

/// Scans [-R, R]^m on a grid for near-returns of the action to its base
/// point, refines each local minimum by Gauss-Newton on t -> Phi(t) - base
/// and reduces the returns to a lattice basis. An empty basis means no
/// returns were found in the box, not that none exist.
PeriodLattice detect_lattice(const flows::FlowAction& action, const LatticeOptions& options = {},
                             Execution exec = Execution::Parallel);

/// Gauss-Newton refinement of one return time starting at `guess`.
/// Returns the refined t and writes the final residual. Throws
/// DegenerateJacobianError when the frame at Phi(t) is rank deficient.
Vec refine_return(const flows::FlowAction& action, const Vec& guess, const LatticeOptions& options,
                  double* residual);

/// Reduces a set of lattice vectors (possibly dependent, with multiples) to a
/// pairwise Gauss-reduced basis of the lattice they generate.
std::vector<Vec> reduce_to_basis(std::vector<Vec> vectors, double tol = 1e-6);

/// True when every vector of each basis is an integer combination of the other.
bool same_lattice(const std::vector<Vec>& a, const std::vector<Vec>& b, double tol = 1e-6);

struct FiberType {
    std::size_t m = 0;
    std::size_t h = 0;
    std::size_t noncompact() const { return m - h; }
    bool is_torus() const { return h == m && m > 0; }
    /// "R^a x T^b", "T^m" or "R^m".
    std::string label() const;
};

FiberType classify_fiber(const PeriodLattice& lattice);

/// theta = sum_l p_l dq^l on the chart.
CovectorField default_primitive(const symp::SymplecticChart& chart);

/// (1/2 pi) of the loop integral of theta over a closed discretized curve
/// (first point == last point within 1e-8): chord trapezoid rule with one
/// Richardson extrapolation step when the segment count is even.
double action_integral(const CovectorField& theta, const std::vector<Vec>& loop);

/// Loop nodes as CSV in the trajectory schema, with t the curve parameter in [0, 1].
void write_loop_csv(std::ostream& out, const std::vector<Vec>& loop);

/// Chart map z -> (I_1..I_n, y_1..y_n).
using ChartMap = std::function<Vec(const Vec&)>;

/// Max deviation of J^T W J from W, with J the central-difference Jacobian of
/// the chart map at each sample; zero exactly for a canonical chart.
double darboux_residual(const ChartMap& chart_map, const std::vector<Vec>& samples, double step,
                        const symp::SymplecticChart& chart, Execution exec = Execution::Parallel);

struct ActionAngleOptions {
    std::size_t loop_nodes = 1024;
    LatticeOptions lattice;
    double section_tol = 1e-13;
    int max_newton = 40;
};

/// Action-angle coordinates for a complete system near a reference point.
///
/// Angles are measured from the coordinate Lagrangian plane through the
/// reference point that is most transverse to the fiber. With the sign
/// convention of symp::SymplecticChart the canonical angle runs against the
/// flow: compact angles are -2 pi (flow-time coefficient along the period
/// basis), noncompact ones are -(raw flow time). Actions of compact
/// directions are loop integrals of theta around the period cycles traversed
/// in the angle direction; noncompact directions use e . F for the unit
/// completion vector e, which is canonical when the periods do not depend on
/// the fiber.
class ActionAngleChart {
public:
    ActionAngleChart(std::vector<expr::Expression> F, symp::SymplecticChart chart,
                     const flows::FlowAction& action, PeriodLattice lattice,
                     CovectorField theta, ActionAngleOptions options = {});

    const Vec& reference() const { return reference_; }
    std::size_t n() const { return chart_.n(); }
    const PeriodLattice& lattice() const { return lattice_; }
    /// Indices of the chart coordinates held fixed on the section.
    const std::vector<std::size_t>& section_coordinates() const { return section_; }

    Vec coordinates(const Vec& w) const;
    Vec actions(const Vec& w) const;
    /// Period basis refined at the fiber through w.
    std::vector<Vec> periods_at(const Vec& w) const;
    /// Loop discretizations around each compact cycle through w.
    std::vector<std::vector<Vec>> loops(const Vec& w) const;

    ChartMap as_map() const;

private:
    std::vector<expr::Expression> F_;
    symp::SymplecticChart chart_;
    std::vector<VectorField> fields_;
    Vec reference_;
    PeriodLattice lattice_;
    CovectorField theta_;
    ActionAngleOptions options_;
    std::vector<std::size_t> section_;
    Mat completion_;  ///< unit vectors completing the period basis (m x (m - h))

    flows::FlowAction action_at(const Vec& w) const;
    Mat generators(const std::vector<Vec>& periods) const;
    std::vector<Vec> loop_points(const Vec& w, const Vec& period) const;
    Vec initial_section_guess(const Vec& w, const std::vector<Vec>& periods) const;
    Vec section_time(const Vec& w, const std::vector<Vec>& periods) const;
};

}  // namespace integ::fibergeom
