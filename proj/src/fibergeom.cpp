#include "integ/fibergeom.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>

#include "integ/errors.hpp"

namespace integ::fibergeom {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

std::string format_vec(const Vec& v) {
    std::ostringstream s;
    s.precision(10);
    s << "(";
    for (Eigen::Index i = 0; i < v.size(); ++i) s << (i ? ", " : "") << v[i];
    s << ")";
    return s.str();
}

Vec sign_normalized(Vec v, double tol) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > tol) {
            if (v[i] < 0) v = -v;
            break;
        }
    }
    return v.array() + 0.0;  // no negative zeros in reports
}

/// Coarse distance table ||Phi(t) - base|| on the grid t in (delta Z)^m, |t|_inf <= N delta.
class GridScan {
public:
    GridScan(const flows::FlowAction& action, double step, long half, flows::IntegratorOptions opt)
        : action_(action), step_(step), half_(half), width_(2 * half + 1), opt_(opt) {
        std::size_t total = 1;
        for (std::size_t l = 0; l < action.m(); ++l) total *= static_cast<std::size_t>(width_);
        dist_.assign(total, std::numeric_limits<double>::infinity());
    }

    void run(Execution exec) {
        const std::size_t m = action_.m();
        const std::size_t stride0 = dist_.size() / static_cast<std::size_t>(width_);
        const auto states = leg_states(0, action_.base());
        for_each_index(states.size(), exec, [&](std::size_t j) {
            if (states[j].size() == 0) return;
            if (m == 1) dist_[j] = (states[j] - action_.base()).norm();
            else descend(1, states[j], j * stride0, stride0 / static_cast<std::size_t>(width_));
        });
    }

    const std::vector<double>& distances() const { return dist_; }
    long width() const { return width_; }

    Vec time_of(std::size_t flat) const {
        const std::size_t m = action_.m();
        Vec t(static_cast<Eigen::Index>(m));
        for (std::size_t l = m; l-- > 0;) {
            t[static_cast<Eigen::Index>(l)] =
                static_cast<double>(static_cast<long>(flat % static_cast<std::size_t>(width_)) - half_) * step_;
            flat /= static_cast<std::size_t>(width_);
        }
        return t;
    }

    std::vector<long> digits_of(std::size_t flat) const {
        std::vector<long> d(action_.m());
        for (std::size_t l = d.size(); l-- > 0;) {
            d[l] = static_cast<long>(flat % static_cast<std::size_t>(width_));
            flat /= static_cast<std::size_t>(width_);
        }
        return d;
    }

    std::size_t flat_of(const std::vector<long>& digits) const {
        std::size_t f = 0;
        for (long d : digits) f = f * static_cast<std::size_t>(width_) + static_cast<std::size_t>(d);
        return f;
    }

private:
    const flows::FlowAction& action_;
    double step_;
    long half_, width_;
    flows::IntegratorOptions opt_;
    std::vector<double> dist_;

    /// States along leg `level` at all grid times; empty vectors past a blow-up.
    std::vector<Vec> leg_states(std::size_t level, const Vec& start) const {
        const VectorField& X = action_.fields()[level];
        std::vector<Vec> out(static_cast<std::size_t>(width_));
        out[static_cast<std::size_t>(half_)] = start;
        for (double dir : {1.0, -1.0}) {
            Vec cur = start;
            for (long j = 1; j <= half_; ++j) {
                try {
                    cur = flows::integrate(X, cur, dir * step_, opt_);
                } catch (const std::exception&) {
                    break;
                }
                out[static_cast<std::size_t>(half_ + static_cast<long>(dir) * j)] = cur;
            }
        }
        return out;
    }

    void descend(std::size_t level, const Vec& start, std::size_t offset, std::size_t stride) {
        const auto states = leg_states(level, start);
        for (std::size_t j = 0; j < states.size(); ++j) {
            if (states[j].size() == 0) continue;
            if (level + 1 == action_.m()) dist_[offset + j] = (states[j] - action_.base()).norm();
            else descend(level + 1, states[j], offset + j * stride, stride / static_cast<std::size_t>(width_));
        }
    }
};

}  // namespace

Mat PeriodLattice::matrix() const {
    Mat B(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(basis.size()));
    for (std::size_t i = 0; i < basis.size(); ++i) B.col(static_cast<Eigen::Index>(i)) = basis[i];
    return B;
}

Vec refine_return(const flows::FlowAction& action, const Vec& guess, const LatticeOptions& options,
                  double* residual) {
    Vec t = guess;
    double res = std::numeric_limits<double>::infinity();
    for (int it = 0; it <= options.max_newton; ++it) {
        const Vec z = action(t);
        const Vec r = z - action.base();
        res = r.norm();
        if (res < options.newton_tol || it == options.max_newton) break;
        const Mat A = action.frame_at(z);
        Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Vec& sv = svd.singularValues();
        if (sv.size() == 0 || sv[0] == 0 || sv[sv.size() - 1] < 1e-10 * sv[0])
            throw DegenerateJacobianError("degenerate Newton system at candidate t = " + format_vec(guess));
        const Vec delta = svd.solve(r);
        t -= delta;
        if (delta.norm() < 1e-15 * (1 + t.norm())) {
            res = (action(t) - action.base()).norm();
            break;
        }
    }
    if (residual) *residual = res;
    return t;
}

std::vector<Vec> reduce_to_basis(std::vector<Vec> vectors, double tol) {
    auto norm_less = [](const Vec& a, const Vec& b) { return a.squaredNorm() < b.squaredNorm(); };
    auto prune = [&](std::vector<Vec>& g) {
        std::vector<Vec> kept;
        for (auto& v : g) {
            if (v.norm() <= tol) continue;
            v = sign_normalized(v, tol);
            bool dup = false;
            for (const auto& k : kept)
                if ((k - v).norm() <= tol) dup = true;
            if (!dup) kept.push_back(v);
        }
        g = std::move(kept);
    };
    prune(vectors);
    for (int sweep = 0; sweep < 1000; ++sweep) {
        std::sort(vectors.begin(), vectors.end(), norm_less);
        bool changed = false;
        for (std::size_t i = 0; i < vectors.size(); ++i)
            for (std::size_t j = 0; j < vectors.size(); ++j) {
                if (i == j) continue;
                const double nj = vectors[j].squaredNorm();
                if (nj <= tol * tol) continue;
                const double mu = std::round(vectors[i].dot(vectors[j]) / nj);
                if (mu == 0) continue;
                Vec cand = vectors[i] - mu * vectors[j];
                if (cand.norm() < vectors[i].norm() - 1e-3 * tol) {
                    vectors[i] = std::move(cand);
                    changed = true;
                }
            }
        prune(vectors);
        if (!changed) break;
    }
    std::sort(vectors.begin(), vectors.end(), norm_less);
    // A dependent remainder that pairwise reduction cannot resolve: keep an
    // independent subset, shortest first.
    if (!vectors.empty()) {
        std::vector<Vec> independent;
        for (const auto& v : vectors) {
            Mat M(v.size(), static_cast<Eigen::Index>(independent.size() + 1));
            for (std::size_t i = 0; i < independent.size(); ++i) M.col(static_cast<Eigen::Index>(i)) = independent[i];
            M.col(M.cols() - 1) = v;
            Eigen::JacobiSVD<Mat> svd(M);
            const Vec& sv = svd.singularValues();
            if (sv[sv.size() - 1] > 1e-8 * sv[0]) independent.push_back(v);
        }
        vectors = std::move(independent);
    }
    return vectors;
}

bool same_lattice(const std::vector<Vec>& a, const std::vector<Vec>& b, double tol) {
    if (a.size() != b.size()) return false;
    if (a.empty()) return true;
    auto contained = [tol](const std::vector<Vec>& basis, const std::vector<Vec>& vs) {
        Mat B(basis.front().size(), static_cast<Eigen::Index>(basis.size()));
        for (std::size_t i = 0; i < basis.size(); ++i) B.col(static_cast<Eigen::Index>(i)) = basis[i];
        auto solver = B.completeOrthogonalDecomposition();
        for (const auto& v : vs) {
            const Vec c = solver.solve(v);
            if ((B * c - v).norm() > tol * (1 + v.norm())) return false;
            if ((c.array() - c.array().round()).abs().maxCoeff() > tol * (1 + c.cwiseAbs().maxCoeff()))
                return false;
        }
        return true;
    };
    return contained(a, b) && contained(b, a);
}

PeriodLattice detect_lattice(const flows::FlowAction& action, const LatticeOptions& options,
                             Execution exec) {
    if (!(options.radius > 0) || !(options.grid_step > 0))
        throw PreconditionError("detect_lattice: radius and grid step must be positive");
    const std::size_t m = action.m();
    const long half = static_cast<long>(std::floor(options.radius / options.grid_step + 1e-9));

    PeriodLattice lattice;
    lattice.m = m;
    lattice.search_radius = options.radius;
    lattice.grid_step = options.grid_step;

    flows::IntegratorOptions coarse = options.integrator;
    coarse.tol = std::max(coarse.tol, 1e-8);
    GridScan scan(action, options.grid_step, half, coarse);
    scan.run(exec);
    const auto& dist = scan.distances();

    double speed = 0;
    const Mat A0 = action.frame_at(action.base());
    for (Eigen::Index i = 0; i < A0.cols(); ++i) speed += A0.col(i).norm();
    const double threshold = options.grid_step * speed + 1e-12;

    // Strict local minima under (distance, index) ordering, excluding t = 0.
    std::vector<long> origin(m, half);
    const std::size_t origin_flat = scan.flat_of(origin);
    std::vector<std::size_t> minima;
    const long width = scan.width();
    std::size_t neighbours = 1;
    for (std::size_t l = 0; l < m; ++l) neighbours *= 3;
    for (std::size_t f = 0; f < dist.size(); ++f) {
        if (f == origin_flat || !(dist[f] <= threshold)) continue;
        const auto digits = scan.digits_of(f);
        bool is_min = true;
        for (std::size_t nb = 0; nb < neighbours && is_min; ++nb) {
            std::vector<long> d = digits;
            std::size_t code = nb;
            bool self = true, inside = true;
            for (std::size_t l = 0; l < m; ++l) {
                const long off = static_cast<long>(code % 3) - 1;
                code /= 3;
                if (off) self = false;
                d[l] += off;
                if (d[l] < 0 || d[l] >= width) inside = false;
            }
            if (self || !inside) continue;
            const std::size_t g = scan.flat_of(d);
            if (dist[g] < dist[f] || (dist[g] == dist[f] && g < f)) is_min = false;
        }
        if (is_min) minima.push_back(f);
    }
    lattice.candidates = minima.size();

    std::vector<std::optional<std::pair<Vec, double>>> refined(minima.size());
    for_each_index(minima.size(), exec, [&](std::size_t c) {
        double res = 0;
        try {
            Vec t = refine_return(action, scan.time_of(minima[c]), options, &res);
            refined[c] = std::make_pair(std::move(t), res);
        } catch (const IntegrationError&) {
        }
    });

    std::vector<Vec> returns;
    for (const auto& r : refined) {
        if (!r) continue;
        const auto& [t, res] = *r;
        if (res > options.return_tol) continue;
        if (t.norm() < 0.5 * options.grid_step) continue;
        if (t.cwiseAbs().maxCoeff() > options.radius + options.grid_step) continue;
        returns.push_back(t);
    }

    for (const auto& b : reduce_to_basis(returns, 1e-6)) {
        double res = 0;
        Vec polished = refine_return(action, b, options, &res);
        lattice.basis.push_back(sign_normalized(polished, 1e-9));
        lattice.residuals.push_back(res);
    }
    if (lattice.basis.empty()) lattice.note = "no returns found in box";
    return lattice;
}

std::string FiberType::label() const {
    if (m == 0) return "point";
    if (h == 0) return "R^" + std::to_string(m);
    if (h == m) return "T^" + std::to_string(m);
    return "R^" + std::to_string(m - h) + " x T^" + std::to_string(h);
}

FiberType classify_fiber(const PeriodLattice& lattice) {
    return {lattice.m, std::min(lattice.m, lattice.rank())};
}

CovectorField default_primitive(const symp::SymplecticChart& chart) {
    const auto& names = chart.names();
    std::vector<expr::Expression> comps;
    for (std::size_t i = 0; i < chart.n(); ++i) comps.push_back(expr::Expression::constant(0, names));
    for (std::size_t i = 0; i < chart.n(); ++i) comps.push_back(expr::Expression::variable(i, names));
    return CovectorField::from_expressions(std::move(comps));
}

double action_integral(const CovectorField& theta, const std::vector<Vec>& loop) {
    if (loop.size() < 2) return 0;
    if ((loop.front() - loop.back()).norm() > 1e-8)
        throw OpenLoopError("loop does not close: gap " + std::to_string((loop.front() - loop.back()).norm()));
    const std::size_t segments = loop.size() - 1;
    std::vector<Vec> values;
    values.reserve(loop.size());
    for (const auto& z : loop) values.push_back(theta.components(z));
    auto chord_sum = [&](std::size_t stride) {
        double sum = 0;
        for (std::size_t i = 0; i + stride <= segments; i += stride)
            sum += 0.5 * (values[i] + values[i + stride]).dot(loop[i + stride] - loop[i]);
        return sum;
    };
    const double fine = chord_sum(1);
    double total = fine;
    if (segments % 2 == 0 && segments >= 4) total = (4 * fine - chord_sum(2)) / 3;
    return total / kTwoPi;
}

double darboux_residual(const ChartMap& chart_map, const std::vector<Vec>& samples, double step,
                        const symp::SymplecticChart& chart, Execution exec) {
    const Mat& W = chart.omega();
    std::vector<double> per_sample(samples.size(), 0.0);
    for_each_index(samples.size(), exec, [&](std::size_t s) {
        const Vec& z = samples[s];
        Mat J(z.size(), z.size());
        Vec zp = z, zm = z;
        for (Eigen::Index k = 0; k < z.size(); ++k) {
            zp[k] = z[k] + step;
            zm[k] = z[k] - step;
            J.col(k) = (chart_map(zp) - chart_map(zm)) / (2 * step);
            zp[k] = zm[k] = z[k];
        }
        if (!(std::abs(J.determinant()) > 1e-12))
            throw DegenerateJacobianError("grid degeneracy: chart Jacobian is singular at sample " +
                                          std::to_string(s));
        per_sample[s] = (J.transpose() * W * J - W).cwiseAbs().maxCoeff();
    });
    double worst = 0;
    for (double r : per_sample) worst = std::max(worst, r);
    return worst;
}

ActionAngleChart::ActionAngleChart(std::vector<expr::Expression> F, symp::SymplecticChart chart,
                                   const flows::FlowAction& action, PeriodLattice lattice,
                                   CovectorField theta, ActionAngleOptions options)
    : F_(std::move(F)),
      chart_(std::move(chart)),
      fields_(action.fields()),
      reference_(action.base()),
      lattice_(std::move(lattice)),
      theta_(std::move(theta)),
      options_(options) {
    const std::size_t n = chart_.n();
    if (action.m() != n || F_.size() != n || lattice_.m != n)
        throw PreconditionError("action-angle chart needs n commuting fields and n functions");

    const Mat A = action.frame_at(reference_);
    double best = 0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        std::vector<std::size_t> rows;
        for (std::size_t l = 0; l < n; ++l) rows.push_back((mask >> l) & 1U ? n + l : l);
        Mat S(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t l = 0; l < n; ++l) S.row(static_cast<Eigen::Index>(l)) = A.row(static_cast<Eigen::Index>(rows[l]));
        const double det = std::abs(S.determinant());
        if (det > best) {
            best = det;
            section_ = rows;
        }
    }
    if (!(best > 1e-10))
        throw DegenerateJacobianError("no coordinate Lagrangian plane is transverse to the fiber");

    const auto m = static_cast<Eigen::Index>(n);
    Mat G = lattice_.matrix();
    completion_.resize(m, 0);
    for (Eigen::Index e = 0; e < m && G.cols() < m; ++e) {
        Mat trial(m, G.cols() + 1);
        trial << G, Vec::Unit(m, e);
        if (Eigen::FullPivLU<Mat>(trial).rank() == trial.cols()) {
            G = trial;
            completion_.conservativeResize(m, completion_.cols() + 1);
            completion_.col(completion_.cols() - 1) = Vec::Unit(m, e);
        }
    }
}

flows::FlowAction ActionAngleChart::action_at(const Vec& w) const {
    return flows::FlowAction(fields_, w, options_.lattice.integrator);
}

std::vector<Vec> ActionAngleChart::periods_at(const Vec& w) const {
    const auto act = action_at(w);
    std::vector<Vec> out;
    for (const auto& b : lattice_.basis) {
        double res = 0;
        Vec t = refine_return(act, b, options_.lattice, &res);
        if (res > options_.lattice.return_tol)
            throw NonConvergenceError("period refinement failed near " + format_vec(b), res);
        out.push_back(std::move(t));
    }
    return out;
}

Mat ActionAngleChart::generators(const std::vector<Vec>& periods) const {
    const auto m = static_cast<Eigen::Index>(chart_.n());
    Mat G(m, m);
    Eigen::Index c = 0;
    for (const auto& p : periods) G.col(c++) = p;
    for (Eigen::Index e = 0; e < completion_.cols(); ++e) G.col(c++) = completion_.col(e);
    return G;
}

std::vector<Vec> ActionAngleChart::loop_points(const Vec& w, const Vec& period) const {
    const VectorField V = linear_combination(period, fields_);
    const std::size_t N = options_.loop_nodes;
    std::vector<double> times(N);
    for (std::size_t j = 1; j <= N; ++j) times[j - 1] = -static_cast<double>(j) / static_cast<double>(N);
    std::vector<Vec> loop{w};
    for (auto& z : flows::integrate_samples(V, w, times, options_.lattice.integrator)) loop.push_back(std::move(z));
    return loop;
}

std::vector<std::vector<Vec>> ActionAngleChart::loops(const Vec& w) const {
    std::vector<std::vector<Vec>> out;
    for (const auto& p : periods_at(w)) out.push_back(loop_points(w, p));
    return out;
}

Vec ActionAngleChart::initial_section_guess(const Vec& w, const std::vector<Vec>& periods) const {
    // The coordinate section can cut a compact orbit more than once; start
    // Newton from the point of the period cell nearest the reference.
    const auto n = static_cast<Eigen::Index>(chart_.n());
    Vec best_t = Vec::Zero(n);
    if (periods.empty()) return best_t;
    const std::size_t per_dim = periods.size() == 1 ? 64 : periods.size() == 2 ? 24 : 8;
    // Symmetric cell [-1/2, 1/2] so the angle cut lies opposite the reference.
    std::vector<double> forward, backward;
    for (std::size_t j = 1; 2 * j <= per_dim; ++j) {
        forward.push_back(static_cast<double>(j) / static_cast<double>(per_dim));
        backward.push_back(-forward.back());
    }
    double best = (w - reference_).norm();
    std::vector<std::pair<Vec, Vec>> frontier{{w, Vec::Zero(n)}};
    for (const auto& period : periods) {
        const VectorField V = linear_combination(period, fields_);
        std::vector<std::pair<Vec, Vec>> next;
        for (const auto& [z, t] : frontier) {
            next.emplace_back(z, t);
            for (const auto* times : {&forward, &backward}) {
                const auto states = flows::integrate_samples(V, z, *times, options_.lattice.integrator);
                for (std::size_t j = 0; j < states.size(); ++j) next.emplace_back(states[j], t + (*times)[j] * period);
            }
        }
        frontier = std::move(next);
    }
    for (const auto& [z, t] : frontier) {
        const double d = (z - reference_).norm();
        if (d < best) {
            best = d;
            best_t = t;
        }
    }
    return best_t;
}

Vec ActionAngleChart::section_time(const Vec& w, const std::vector<Vec>& periods) const {
    const auto act = action_at(w);
    const auto n = static_cast<Eigen::Index>(chart_.n());
    auto project = [&](const Vec& z) {
        Vec s(n);
        for (Eigen::Index l = 0; l < n; ++l) s[l] = z[static_cast<Eigen::Index>(section_[static_cast<std::size_t>(l)])];
        return s;
    };
    const Vec target = project(reference_);
    Vec tau = initial_section_guess(w, periods);
    double res = std::numeric_limits<double>::infinity();
    for (int it = 0; it < options_.max_newton; ++it) {
        const Vec z = act(tau);
        const Vec e = project(z) - target;
        res = e.cwiseAbs().maxCoeff();
        if (res < options_.section_tol * (1 + target.cwiseAbs().maxCoeff())) return tau;
        const Mat A = act.frame_at(z);
        Mat S(n, n);
        for (Eigen::Index l = 0; l < n; ++l) S.row(l) = A.row(static_cast<Eigen::Index>(section_[static_cast<std::size_t>(l)]));
        const Vec delta = S.fullPivLu().solve(e);
        tau -= delta;
        if (delta.norm() < 1e-15 * (1 + tau.norm())) return tau;
    }
    if (res < 1e-10) return tau;
    throw NonConvergenceError("section intersection did not converge", res);
}

Vec ActionAngleChart::actions(const Vec& w) const {
    const auto periods = periods_at(w);
    const auto n = static_cast<Eigen::Index>(chart_.n());
    Vec I(n);
    Eigen::Index c = 0;
    for (const auto& p : periods) I[c++] = action_integral(theta_, loop_points(w, p));
    Vec values(n);
    for (Eigen::Index a = 0; a < n; ++a) values[a] = F_[static_cast<std::size_t>(a)].value(w);
    for (Eigen::Index e = 0; e < completion_.cols(); ++e) I[c++] = completion_.col(e).dot(values);
    return I;
}

Vec ActionAngleChart::coordinates(const Vec& w) const {
    const auto periods = periods_at(w);
    const auto n = static_cast<Eigen::Index>(chart_.n());
    const Mat G = generators(periods);
    const Vec t = -section_time(w, periods);
    const Vec c = G.fullPivLu().solve(t);
    const auto h = static_cast<Eigen::Index>(periods.size());

    Vec out(2 * n);
    Vec values(n);
    for (Eigen::Index a = 0; a < n; ++a) values[a] = F_[static_cast<std::size_t>(a)].value(w);
    for (Eigen::Index l = 0; l < n; ++l) {
        if (l < h) {
            out[l] = action_integral(theta_, loop_points(w, periods[static_cast<std::size_t>(l)]));
            out[n + l] = -kTwoPi * c[l];
        } else {
            out[l] = completion_.col(l - h).dot(values);
            out[n + l] = -c[l];
        }
    }
    return out;
}

void write_loop_csv(std::ostream& out, const std::vector<Vec>& loop) {
    std::vector<flows::TrajectoryPoint> rows;
    const double last = loop.size() > 1 ? static_cast<double>(loop.size() - 1) : 1.0;
    for (std::size_t i = 0; i < loop.size(); ++i) rows.push_back({static_cast<double>(i) / last, loop[i]});
    flows::write_trajectory_csv(out, rows);
}

ChartMap ActionAngleChart::as_map() const {
    auto self = std::make_shared<const ActionAngleChart>(*this);
    return [self](const Vec& w) { return self->coordinates(w); };
}

}  // namespace integ::fibergeom
