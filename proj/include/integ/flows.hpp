#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "integ/field.hpp"
#include "integ/parallel.hpp"

namespace integ::flows {

struct IntegratorOptions {
    /// Per-step local error bound (mixed absolute/relative).
    double tol = 1e-10;
    /// State norm above which the integration is aborted as a suspected blow-up.
    double blowup_bound = 1e8;
    /// Largest |t| accepted by a single integrate() call.
    double horizon = 100;
    std::size_t max_steps = 5'000'000;
};

struct TrajectoryPoint {
    double t;
    Vec x;
};

/// Endpoint of the integral curve of X through `start` after time t
/// (t may be negative). Uses an embedded Runge-Kutta 4(5) pair
/// (Dormand-Prince) with PI step-size control.
///
/// Throws BlowupError when |x| exceeds the blow-up bound and
/// StepUnderflowError when the step falls below 1e-13 |t|. When `trajectory`
/// is non-null it receives the start point and every accepted step.
Vec integrate(const VectorField& X, const Vec& start, double t,
              const IntegratorOptions& options = {},
              std::vector<TrajectoryPoint>* trajectory = nullptr);

/// States at the given times along one trajectory. `times` must be monotone
/// (all >= 0 increasing, or all <= 0 decreasing); the integration steps land
/// exactly on each requested time.
std::vector<Vec> integrate_samples(const VectorField& X, const Vec& start,
                                   std::span<const double> times,
                                   const IntegratorOptions& options = {});

/// The R^m action t -> (flow of X_m for t_m) o ... o (flow of X_1 for t_1)
/// applied to a base point: legs are executed in index order, X_1 first.
class FlowAction {
public:
    FlowAction(std::vector<VectorField> fields, Vec base, IntegratorOptions options = {});

    std::size_t m() const { return fields_.size(); }
    std::size_t dimension() const { return static_cast<std::size_t>(base_.size()); }
    const std::vector<VectorField>& fields() const { return fields_; }
    const Vec& base() const { return base_; }
    const IntegratorOptions& options() const { return options_; }

    Vec operator()(const Vec& t) const { return apply(base_, t); }
    /// Same composition started from an arbitrary point.
    Vec apply(const Vec& point, const Vec& t) const;
    /// Columns X_i(point): the differential of the action for commuting fields.
    Mat frame_at(const Vec& point) const;

    FlowAction rebased(Vec new_base) const { return FlowAction(fields_, std::move(new_base), options_); }

private:
    std::vector<VectorField> fields_;
    Vec base_;
    IntegratorOptions options_;
};

Vec flow_compose(const FlowAction& action, const Vec& t);

/// |phi_X^t phi_Y^s (z) - phi_Y^s phi_X^t (z)|.
double commutation_residual(const VectorField& X, const VectorField& Y, const Vec& z, double t,
                            double s, const IntegratorOptions& options = {});

/// Numerical completeness is undecidable: a clean verdict only means no
/// blow-up was seen within the horizon, in either time direction.
struct CompletenessVerdict {
    bool blowup = false;
    double blowup_time = 0;
    std::string detail;
    std::string label() const;
};

std::vector<CompletenessVerdict> completeness_probe(const VectorField& X,
                                                    const std::vector<Vec>& points,
                                                    double horizon, double blowup_bound,
                                                    const IntegratorOptions& options = {},
                                                    Execution exec = Execution::Parallel);

/// CSV with header "t,x1,...,xd" and one row per trajectory point.
void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryPoint>& trajectory);

}  // namespace integ::flows
