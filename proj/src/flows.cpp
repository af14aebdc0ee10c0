#include "integ/flows.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "integ/errors.hpp"

namespace integ::flows {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2, kMaxFactor = 5.0;
constexpr double kAlpha = 0.7 / 5, kBeta = 0.4 / 5;
constexpr double kUnderflow = 1e-13;

class DormandPrince {
public:
    DormandPrince(const VectorField& X, Vec y, const IntegratorOptions& options, double span)
        : X_(X), opt_(options), span_(std::abs(span)), y_(std::move(y)) {}

    double time() const { return t_; }
    const Vec& state() const { return y_; }

    void advance_to(double target, std::vector<TrajectoryPoint>* trajectory) {
        if (target == t_) return;
        const double dir = target > t_ ? 1.0 : -1.0;
        if (!have_k1_) {
            k1_ = X_(y_);
            have_k1_ = true;
        }
        if (h_ == 0 || h_ * dir < 0) h_ = dir * initial_step(std::abs(target - t_));

        while ((target - t_) * dir > 0) {
            if (++steps_ > opt_.max_steps)
                throw IntegrationError("integrator exceeded the maximum step count", t_);
            const double remaining = target - t_;
            bool last = false;
            double h = h_;
            if (std::abs(h) >= std::abs(remaining)) {
                h = remaining;
                last = true;
            }
            if (std::abs(h) < kUnderflow * span_ && !last)
                throw StepUnderflowError("step size underflow at t = " + std::to_string(t_), t_);

            const double err = attempt(h);
            if (err <= 1.0) {
                t_ = last ? target : t_ + h;
                y_ = y_new_;
                k1_ = k7_;
                const double norm = y_.norm();
                if (!std::isfinite(norm) || norm > opt_.blowup_bound)
                    throw BlowupError("state norm exceeded " + std::to_string(opt_.blowup_bound) +
                                          " at t = " + std::to_string(t_),
                                      t_);
                if (trajectory) trajectory->push_back({t_, y_});
                double factor = kSafety * std::pow(std::max(err, 1e-10), -kAlpha) *
                                std::pow(err_prev_, kBeta);
                factor = std::clamp(factor, kMinFactor, rejected_ ? 1.0 : kMaxFactor);
                err_prev_ = std::max(err, 1e-4);
                rejected_ = false;
                // Do not let a truncated final step shrink the next call's estimate.
                if (!last || std::abs(h * factor) > std::abs(h_)) h_ = h * factor;
            } else {
                const double factor =
                    std::isfinite(err) ? std::max(kMinFactor, kSafety * std::pow(err, -0.2)) : kMinFactor;
                h_ = h * factor;
                rejected_ = true;
                if (std::abs(h_) < kUnderflow * span_)
                    throw StepUnderflowError("step size underflow at t = " + std::to_string(t_), t_);
            }
        }
    }

private:
    const VectorField& X_;
    const IntegratorOptions& opt_;
    double span_;
    double t_ = 0;
    Vec y_, y_new_, k1_, k7_;
    bool have_k1_ = false;
    bool rejected_ = false;
    double h_ = 0;
    double err_prev_ = 1e-4;
    std::size_t steps_ = 0;

    double scaled_norm(const Vec& v, const Vec& ref) const {
        double sum = 0;
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const double sc = opt_.tol * (1 + std::abs(ref[i]));
            sum += (v[i] / sc) * (v[i] / sc);
        }
        return std::sqrt(sum / static_cast<double>(std::max<Eigen::Index>(1, v.size())));
    }

    double initial_step(double remaining) const {
        const double d0 = scaled_norm(y_, y_);
        const double d1 = scaled_norm(k1_, y_);
        double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h = std::min(h, 0.1);
        return std::min(std::max(h, 1e-8), remaining);
    }

    double attempt(double h) {
        const Vec& y = y_;
        const Vec& k1 = k1_;
        Vec k2 = X_(y + h * (a21 * k1));
        Vec k3 = X_(y + h * (a31 * k1 + a32 * k2));
        Vec k4 = X_(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        Vec k5 = X_(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        Vec k6 = X_(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        y_new_ = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        k7_ = X_(y_new_);
        Vec err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7_);
        Vec ref = y.cwiseAbs().cwiseMax(y_new_.cwiseAbs());
        const double e = scaled_norm(err, ref);
        return std::isfinite(e) ? e : std::numeric_limits<double>::infinity();
    }
};

void check_horizon(double t, const IntegratorOptions& options) {
    if (!(std::abs(t) <= options.horizon))
        throw PreconditionError("|t| = " + std::to_string(std::abs(t)) + " exceeds the horizon " +
                                std::to_string(options.horizon));
}

}  // namespace

Vec integrate(const VectorField& X, const Vec& start, double t, const IntegratorOptions& options,
              std::vector<TrajectoryPoint>* trajectory) {
    if (static_cast<std::size_t>(start.size()) != X.dimension())
        throw PreconditionError("integrate: start point dimension mismatch");
    check_horizon(t, options);
    if (trajectory) trajectory->push_back({0.0, start});
    if (t == 0) return start;
    DormandPrince dp(X, start, options, t);
    dp.advance_to(t, trajectory);
    return dp.state();
}

std::vector<Vec> integrate_samples(const VectorField& X, const Vec& start,
                                   std::span<const double> times,
                                   const IntegratorOptions& options) {
    std::vector<Vec> out;
    out.reserve(times.size());
    if (times.empty()) return out;
    double span = 0;
    for (double t : times) {
        check_horizon(t, options);
        span = std::max(span, std::abs(t));
    }
    DormandPrince dp(X, start, options, span);
    double prev = 0;
    for (double t : times) {
        if ((prev > 0 && t < prev) || (prev < 0 && t > prev) || (t > 0 && prev < 0) ||
            (t < 0 && prev > 0))
            throw PreconditionError("integrate_samples: times must be monotone away from 0");
        dp.advance_to(t, nullptr);
        out.push_back(dp.state());
        prev = t;
    }
    return out;
}

FlowAction::FlowAction(std::vector<VectorField> fields, Vec base, IntegratorOptions options)
    : fields_(std::move(fields)), base_(std::move(base)), options_(options) {
    if (fields_.empty()) throw PreconditionError("flow action needs at least one field");
    for (const auto& f : fields_)
        if (f.dimension() != static_cast<std::size_t>(base_.size()))
            throw PreconditionError("flow action: field/base dimension mismatch");
}

Vec FlowAction::apply(const Vec& point, const Vec& t) const {
    if (static_cast<std::size_t>(t.size()) != fields_.size())
        throw PreconditionError("flow action: time vector has wrong length");
    Vec z = point;
    for (std::size_t i = 0; i < fields_.size(); ++i) {
        try {
            z = integrate(fields_[i], z, t[static_cast<Eigen::Index>(i)], options_);
        } catch (IntegrationError& e) {
            e.leg = i;
            throw;
        }
    }
    return z;
}

Mat FlowAction::frame_at(const Vec& point) const {
    Mat A(point.size(), static_cast<Eigen::Index>(fields_.size()));
    for (std::size_t i = 0; i < fields_.size(); ++i)
        A.col(static_cast<Eigen::Index>(i)) = fields_[i](point);
    return A;
}

Vec flow_compose(const FlowAction& action, const Vec& t) { return action(t); }

double commutation_residual(const VectorField& X, const VectorField& Y, const Vec& z, double t,
                            double s, const IntegratorOptions& options) {
    const Vec a = integrate(X, integrate(Y, z, s, options), t, options);
    const Vec b = integrate(Y, integrate(X, z, t, options), s, options);
    return (a - b).norm();
}

std::string CompletenessVerdict::label() const {
    if (!blowup) return "no-blowup-within-horizon";
    return "blowup-detected(t*=" + std::to_string(blowup_time) + ")";
}

std::vector<CompletenessVerdict> completeness_probe(const VectorField& X,
                                                    const std::vector<Vec>& points,
                                                    double horizon, double blowup_bound,
                                                    const IntegratorOptions& options,
                                                    Execution exec) {
    if (!(horizon > 0) || !(blowup_bound > 0))
        throw PreconditionError("completeness_probe: horizon and bound must be positive");
    IntegratorOptions opt = options;
    opt.horizon = horizon;
    opt.blowup_bound = blowup_bound;
    std::vector<CompletenessVerdict> verdicts(points.size());
    for_each_index(points.size(), exec, [&](std::size_t i) {
        CompletenessVerdict v;
        for (double direction : {1.0, -1.0}) {
            try {
                integrate(X, points[i], direction * horizon, opt);
            } catch (const IntegrationError& e) {
                v.blowup = true;
                v.blowup_time = e.time_reached();
                v.detail = e.what();
            } catch (const std::exception& e) {
                v.blowup = true;
                v.detail = e.what();
            }
            if (v.blowup) break;
        }
        verdicts[i] = std::move(v);
    });
    return verdicts;
}

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryPoint>& trajectory) {
    const auto d = trajectory.empty() ? 0 : trajectory.front().x.size();
    out << "t";
    for (Eigen::Index i = 1; i <= d; ++i) out << ",x" << i;
    out << '\n';
    const auto old_precision = out.precision(17);
    for (const auto& p : trajectory) {
        out << p.t;
        for (Eigen::Index i = 0; i < p.x.size(); ++i) out << ',' << p.x[i];
        out << '\n';
    }
    out.precision(old_precision);
}

}  // namespace integ::flows
