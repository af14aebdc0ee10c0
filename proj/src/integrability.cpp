#include "integ/integrability.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "integ/errors.hpp"

namespace integ::integrability {

namespace {

std::string format_point(const Vec& z) {
    std::ostringstream s;
    s.precision(6);
    s << "(";
    for (Eigen::Index i = 0; i < z.size(); ++i) s << (i ? ", " : "") << z[i];
    s << ")";
    return s.str();
}

Mat jacobian_of(const std::vector<expr::Expression>& F, const Vec& z, Vec* values = nullptr) {
    Mat J(static_cast<Eigen::Index>(F.size()), z.size());
    if (values) values->resize(static_cast<Eigen::Index>(F.size()));
    for (std::size_t i = 0; i < F.size(); ++i) {
        auto j = F[i].jet1(z);
        J.row(static_cast<Eigen::Index>(i)) = j.gradient.transpose();
        if (values) (*values)[static_cast<Eigen::Index>(i)] = j.value;
    }
    return J;
}

std::vector<BracketSample> evaluate_samples(const std::vector<expr::Expression>& F,
                                            const std::vector<Vec>& samples,
                                            const symp::SymplecticChart& chart,
                                            const Tolerances& tol, Execution exec) {
    for (const auto& f : F)
        if (f.dimension() != chart.dimension())
            throw PreconditionError("function '" + f.to_string() + "' is not defined on the chart");
    std::vector<BracketSample> out(samples.size());
    for_each_index(samples.size(), exec, [&](std::size_t s) {
        BracketSample b;
        b.point = samples[s];
        try {
            const Mat J = jacobian_of(F, samples[s], &b.values);
            b.brackets = symp::bracket_matrix(F, samples[s], chart);
            b.jacobian_rank = numeric_rank(J, tol.rank_relative, tol.rank_absolute);
            b.s_rank = numeric_rank(b.brackets, tol.rank_relative, tol.rank_absolute);
        } catch (const DomainError& e) {
            throw DomainError(std::string(e.what()) + " at sample " + std::to_string(s) + " " +
                                  format_point(samples[s]),
                              e.subexpression());
        }
        out[s] = std::move(b);
    });
    return out;
}

void fill_bracket_statistics(BracketReport& r) {
    for (const auto& s : r.samples) {
        const Mat& B = s.brackets;
        r.max_antisymmetry_error = std::max(r.max_antisymmetry_error, (B + B.transpose()).cwiseAbs().maxCoeff());
        for (Eigen::Index i = 0; i < B.rows(); ++i)
            for (Eigen::Index j = i + 1; j < B.cols(); ++j)
                if (std::abs(B(i, j)) > r.max_involution_residual) {
                    r.max_involution_residual = std::abs(B(i, j));
                    r.worst_pair = {static_cast<std::size_t>(i), static_cast<std::size_t>(j)};
                }
    }
}

std::string pair_label(std::pair<std::size_t, std::size_t> p) {
    return "(" + std::to_string(p.first + 1) + "," + std::to_string(p.second + 1) + ")";
}

}  // namespace

int numeric_rank(const Mat& A, double relative, double absolute) {
    if (A.size() == 0) return 0;
    Eigen::JacobiSVD<Mat> svd(A);
    const Vec& sv = svd.singularValues();
    if (sv.size() == 0) return 0;
    const double threshold = std::max(relative * sv[0], absolute);
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > threshold) ++r;
    return r;
}

std::string Verdict::label() const {
    switch (kind) {
        case VerdictKind::Complete: return "complete(" + std::to_string(k) + ")";
        case VerdictKind::Partial: return "partial(" + std::to_string(k) + ")";
        case VerdictKind::Noncommutative:
            return "noncommutative(" + std::to_string(k) + ", " + std::to_string(rank) + ")";
        case VerdictKind::Failed: return "failed(" + reason + ")";
    }
    return "?";
}

BracketReport check_involution(const std::vector<expr::Expression>& F,
                               const std::vector<Vec>& samples,
                               const symp::SymplecticChart& chart, const Tolerances& tol,
                               Execution exec) {
    if (F.empty()) throw PreconditionError("check_involution needs at least one function");
    BracketReport r;
    r.n = chart.n();
    r.k = F.size();
    r.samples = evaluate_samples(F, samples, chart, tol, exec);
    fill_bracket_statistics(r);

    const int k = static_cast<int>(r.k);
    std::optional<std::size_t> dependent_at;
    for (std::size_t s = 0; s < r.samples.size() && !dependent_at; ++s)
        if (r.samples[s].jacobian_rank < k) dependent_at = s;

    if (r.max_involution_residual >= tol.involution) {
        r.verdict = {VerdictKind::Failed, k, 0,
                     "involution fails at pair " + pair_label(r.worst_pair) + ", max |{F_i,F_j}| = " +
                         std::to_string(r.max_involution_residual)};
    } else if (dependent_at) {
        r.verdict = {VerdictKind::Failed, k, 0,
                     "dF not independent at sample " + std::to_string(*dependent_at) + ", rank " +
                         std::to_string(r.samples[*dependent_at].jacobian_rank)};
    } else if (r.k > r.n) {
        r.verdict = {VerdictKind::Failed, k, 0, "more functions than degrees of freedom"};
    } else if (r.k == r.n) {
        r.verdict = {VerdictKind::Complete, k, 0, ""};
    } else {
        r.verdict = {VerdictKind::Partial, k, 0, ""};
    }
    if (r.max_antisymmetry_error > tol.antisymmetry)
        r.diagnostics.push_back("bracket matrices deviate from antisymmetry by " +
                                std::to_string(r.max_antisymmetry_error));
    return r;
}

CoinducedStructure::CoinducedStructure(std::vector<std::string> base_coordinates,
                                       std::vector<std::vector<expr::Expression>> entries)
    : coords_(std::move(base_coordinates)), s_(std::move(entries)) {
    if (s_.size() != coords_.size()) throw PreconditionError("coinduced structure must be k x k");
    for (const auto& row : s_) {
        if (row.size() != coords_.size()) throw PreconditionError("coinduced structure must be k x k");
        for (const auto& e : row)
            if (e.coordinates() != coords_)
                throw PreconditionError("coinduced structure entries must use the base coordinates");
    }
}

Mat CoinducedStructure::at(const Vec& x) const {
    const auto k = static_cast<Eigen::Index>(coords_.size());
    Mat S(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index b = 0; b < k; ++b)
            S(a, b) = s_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)].value(x);
    return S;
}

BracketReport check_closure(const std::vector<expr::Expression>& F,
                            const std::vector<Vec>& samples, const symp::SymplecticChart& chart,
                            const Tolerances& tol, const CoinducedStructure* structure,
                            Execution exec) {
    if (F.empty()) throw PreconditionError("check_closure needs at least one function");
    BracketReport r;
    r.n = chart.n();
    r.k = F.size();
    r.samples = evaluate_samples(F, samples, chart, tol, exec);
    fill_bracket_statistics(r);

    // Group samples by F-value.
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t s = 0; s < r.samples.size(); ++s) {
        bool placed = false;
        for (auto& g : groups) {
            if ((r.samples[g.front()].values - r.samples[s].values).cwiseAbs().maxCoeff() <= tol.pairing) {
                g.push_back(s);
                placed = true;
                break;
            }
        }
        if (!placed) groups.push_back({s});
    }
    for (const auto& g : groups) {
        if (g.size() < 2) continue;
        ++r.fiber_groups;
        for (std::size_t a = 0; a < g.size(); ++a)
            for (std::size_t b = a + 1; b < g.size(); ++b)
                r.closure_residual =
                    std::max(r.closure_residual,
                             (r.samples[g[a]].brackets - r.samples[g[b]].brackets).cwiseAbs().maxCoeff());
    }
    r.closure_verifiable = r.fiber_groups > 0;
    if (!r.closure_verifiable)
        r.diagnostics.push_back("insufficient pairing: no two samples share an F-value; closure unverifiable");

    if (structure) {
        if (structure->k() != r.k) throw PreconditionError("coinduced structure size differs from k");
        for (const auto& s : r.samples)
            r.closure_residual = std::max(r.closure_residual,
                                          (s.brackets - structure->at(s.values)).cwiseAbs().maxCoeff());
        r.closure_verifiable = true;
    }

    const int k = static_cast<int>(r.k), n = static_cast<int>(r.n);
    const int expected_rank = 2 * (k - n);
    int min_rank = k, max_rank = 0;
    std::optional<std::size_t> dependent_at;
    for (std::size_t s = 0; s < r.samples.size(); ++s) {
        min_rank = std::min(min_rank, r.samples[s].s_rank);
        max_rank = std::max(max_rank, r.samples[s].s_rank);
        if (!dependent_at && r.samples[s].jacobian_rank < k) dependent_at = s;
    }
    if (r.samples.empty()) min_rank = max_rank = 0;
    r.rank_drop = min_rank != max_rank;
    if (r.rank_drop)
        r.diagnostics.push_back("rank drop: rank of s varies across samples (min " +
                                std::to_string(min_rank) + ", max " + std::to_string(max_rank) + ")");
    if (r.max_antisymmetry_error > tol.antisymmetry)
        r.diagnostics.push_back("bracket matrices deviate from antisymmetry by " +
                                std::to_string(r.max_antisymmetry_error));

    if (k < n || k >= 2 * n) {
        r.verdict = {VerdictKind::Failed, k, max_rank, "closure check needs n <= k < 2n"};
    } else if (dependent_at) {
        r.verdict = {VerdictKind::Failed, k, max_rank,
                     "F is not a submersion at sample " + std::to_string(*dependent_at)};
    } else if (!r.closure_verifiable) {
        r.verdict = {VerdictKind::Failed, k, max_rank, "closure unverifiable: no fiber pairs"};
    } else if (r.closure_residual >= tol.closure) {
        r.verdict = {VerdictKind::Failed, k, max_rank,
                     "brackets are not functions of F (spread " + std::to_string(r.closure_residual) + ")"};
    } else if (r.rank_drop) {
        r.verdict = {VerdictKind::Failed, k, max_rank, "rank of s is not constant"};
    } else if (max_rank != expected_rank) {
        r.verdict = {VerdictKind::Failed, k, max_rank,
                     "rank of s is " + std::to_string(max_rank) + ", expected 2(k-n) = " +
                         std::to_string(expected_rank)};
    } else if (k == n) {
        r.verdict = {VerdictKind::Complete, k, 0, ""};
    } else {
        r.verdict = {VerdictKind::Noncommutative, k, max_rank, ""};
    }
    return r;
}

std::vector<Vec> with_fiber_partners(const std::vector<expr::Expression>& F,
                                     const std::vector<Vec>& samples, Rng& rng, double step) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Vec> out;
    out.reserve(2 * samples.size());
    for (const auto& z : samples) {
        Vec target;
        const Mat J = jacobian_of(F, z, &target);
        Eigen::JacobiSVD<Mat> svd(J, Eigen::ComputeFullV);
        const int r = numeric_rank(J, 1e-8, 1e-12);
        const Eigen::Index nullity = z.size() - r;
        out.push_back(z);
        if (nullity <= 0) continue;
        const Mat N = svd.matrixV().rightCols(nullity);
        Vec g(nullity);
        for (Eigen::Index i = 0; i < nullity; ++i) g[i] = gauss(rng);
        Vec w = z + step * (N * g).normalized();
        bool converged = false;
        const double scale = 1 + target.cwiseAbs().maxCoeff();
        for (int it = 0; it < 50; ++it) {
            Vec values;
            const Mat Jw = jacobian_of(F, w, &values);
            const Vec defect = values - target;
            if (defect.cwiseAbs().maxCoeff() < 1e-14 * scale) {
                converged = true;
                break;
            }
            w -= Jw.completeOrthogonalDecomposition().solve(defect);
        }
        if (converged) out.push_back(w);
    }
    return out;
}

CasimirReport verify_casimirs(const CoinducedStructure& S, const std::vector<expr::Expression>& C,
                              const std::vector<Vec>& base_samples, std::size_t expected,
                              double tol, const Tolerances& rank_tol) {
    CasimirReport rep;
    rep.expected = expected;
    rep.tolerance = tol;
    rep.min_rank = static_cast<int>(expected);
    for (const auto& c : C)
        if (c.coordinates() != S.base_coordinates())
            throw PreconditionError("Casimir '" + c.to_string() + "' is not over the base coordinates");
    for (const auto& x : base_samples) {
        const Mat M = S.at(x);
        Mat grads(static_cast<Eigen::Index>(C.size()), x.size());
        for (std::size_t i = 0; i < C.size(); ++i) {
            const Vec g = C[i].jet1(x).gradient;
            grads.row(static_cast<Eigen::Index>(i)) = g.transpose();
            rep.residual = std::max(rep.residual, (M * g).norm());
        }
        const int rank = C.empty() ? 0 : numeric_rank(grads, rank_tol.rank_relative, rank_tol.rank_absolute);
        if (rank < rep.min_rank) rep.min_rank = rank;
        if (rank != static_cast<int>(expected) && !rep.offending_sample) rep.offending_sample = x;
    }
    rep.independent = C.size() == expected && !rep.offending_sample;
    return rep;
}

std::vector<VectorField> derived_fields(const std::vector<expr::Expression>& C,
                                        const std::vector<expr::Expression>& F,
                                        const symp::SymplecticChart& chart) {
    auto Fs = std::make_shared<const std::vector<expr::Expression>>(F);
    const Mat W = chart.omega();
    std::vector<VectorField> out;
    for (const auto& c : C) {
        if (c.dimension() != F.size())
            throw PreconditionError("Casimir arity differs from the number of functions");
        out.emplace_back(
            chart.dimension(),
            [Fs, c, W](const Vec& z) -> Vec {
                Vec x;
                const Mat J = jacobian_of(*Fs, z, &x);
                return W * (J.transpose() * c.jet1(x).gradient);
            },
            [Fs, c, W](const Vec& z) -> Mat {
                const auto k = static_cast<Eigen::Index>(Fs->size());
                Vec x(k);
                Mat G(z.size(), k);
                std::vector<Mat> hessians;
                for (Eigen::Index a = 0; a < k; ++a) {
                    auto j = (*Fs)[static_cast<std::size_t>(a)].jet2(z);
                    x[a] = j.value;
                    G.col(a) = j.gradient;
                    hessians.push_back(std::move(j.hessian));
                }
                const auto cj = c.jet2(x);
                Mat inner = G * cj.hessian * G.transpose();
                for (Eigen::Index a = 0; a < k; ++a)
                    inner += cj.gradient[a] * hessians[static_cast<std::size_t>(a)];
                return W * inner;
            });
    }
    return out;
}

std::vector<expr::Expression> pullback(const std::vector<expr::Expression>& C,
                                       const std::vector<expr::Expression>& F) {
    std::vector<expr::Expression> out;
    for (const auto& c : C) out.push_back(expr::substitute(c, F));
    return out;
}

double derived_field_mismatch(const std::vector<VectorField>& derived,
                              const std::vector<expr::Expression>& C,
                              const std::vector<expr::Expression>& F,
                              const symp::SymplecticChart& chart, const std::vector<Vec>& samples) {
    const auto composed = pullback(C, F);
    double worst = 0;
    for (std::size_t i = 0; i < derived.size(); ++i) {
        const VectorField direct = symp::hamiltonian_field(composed[i], chart);
        for (const auto& z : samples) worst = std::max(worst, (derived[i](z) - direct(z)).cwiseAbs().maxCoeff());
    }
    return worst;
}

double pairwise_commutation_of_derived(const std::vector<VectorField>& fields,
                                       const std::vector<Vec>& samples,
                                       const symp::SymplecticChart& chart) {
    double worst = 0;
    for (const auto& z : samples) {
        std::vector<Vec> values;
        for (const auto& f : fields) values.push_back(f(z));
        for (std::size_t i = 0; i < values.size(); ++i)
            for (std::size_t j = i + 1; j < values.size(); ++j)
                worst = std::max(worst, std::abs(chart.pairing(values[i], values[j])));
    }
    return worst;
}

}  // namespace integ::integrability
