#pragma once

// Hypothesis checks for complete, partial and noncommutative integrability on
// sampled points, the coinduced Poisson structure on the image of F, Casimir
// verification and the derived fields X_{C o F} = (dC/dx_a)(F) X_{F_a}.

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "integ/expr.hpp"
#include "integ/field.hpp"
#include "integ/parallel.hpp"
#include "integ/sampling.hpp"
#include "integ/symplectic.hpp"

namespace integ::integrability {

struct Tolerances {
    /// Bound on |{F_i, F_j}| for involution.
    double involution = 1e-10;
    /// Singular values below rank_relative * sigma_max (or rank_absolute) count as zero.
    double rank_relative = 1e-8;
    double rank_absolute = 1e-10;
    /// Bound on the spread of bracket values within one fiber group.
    double closure = 1e-8;
    /// Two samples belong to the same fiber when their F-values agree to this.
    double pairing = 1e-9;
    double antisymmetry = 1e-12;
};

int numeric_rank(const Mat& A, double relative, double absolute);

enum class VerdictKind { Complete, Partial, Noncommutative, Failed };

struct Verdict {
    VerdictKind kind = VerdictKind::Failed;
    int k = 0;
    int rank = 0;
    std::string reason;

    std::string label() const;
};

struct BracketSample {
    Vec point;
    Vec values;    ///< F(point)
    Mat brackets;  ///< {F_i, F_j}(point)
    int jacobian_rank = 0;
    int s_rank = 0;
};

struct BracketReport {
    std::size_t n = 0;
    std::size_t k = 0;
    std::vector<BracketSample> samples;
    double max_involution_residual = 0;
    /// 0-based indices of the pair attaining the largest |{F_i, F_j}|.
    std::pair<std::size_t, std::size_t> worst_pair{0, 0};
    double max_antisymmetry_error = 0;
    double closure_residual = 0;
    bool closure_verifiable = false;
    std::size_t fiber_groups = 0;
    bool rank_drop = false;
    std::vector<std::string> diagnostics;
    Verdict verdict;
};

/// Involution test: brackets vanish and dF_1..dF_k are independent.
BracketReport check_involution(const std::vector<expr::Expression>& F,
                               const std::vector<Vec>& samples,
                               const symp::SymplecticChart& chart, const Tolerances& tol = {},
                               Execution exec = Execution::Parallel);

/// Coinduced Poisson structure s_{ab}(x) on the image of F, coordinates x_1..x_k.
class CoinducedStructure {
public:
    /// entries[a][b] over `base_coordinates`; must be antisymmetric.
    CoinducedStructure(std::vector<std::string> base_coordinates,
                       std::vector<std::vector<expr::Expression>> entries);

    std::size_t k() const { return coords_.size(); }
    const std::vector<std::string>& base_coordinates() const { return coords_; }
    const expr::Expression& entry(std::size_t a, std::size_t b) const { return s_[a][b]; }
    Mat at(const Vec& x) const;

private:
    std::vector<std::string> coords_;
    std::vector<std::vector<expr::Expression>> s_;
};

/// Closure test {F_a, F_b} = s_ab(F): samples are grouped by F-value and the
/// bracket matrices within each group must agree. When `structure` is given
/// the brackets are also compared against s(F(z)) directly.
BracketReport check_closure(const std::vector<expr::Expression>& F,
                            const std::vector<Vec>& samples, const symp::SymplecticChart& chart,
                            const Tolerances& tol = {},
                            const CoinducedStructure* structure = nullptr,
                            Execution exec = Execution::Parallel);

/// For each sample, a second point on the same fiber of F: a random step of
/// length `step` inside ker dF followed by Newton projection back onto the
/// level set. Samples whose projection fails are skipped.
std::vector<Vec> with_fiber_partners(const std::vector<expr::Expression>& F,
                                     const std::vector<Vec>& samples, Rng& rng, double step);

struct CasimirReport {
    double residual = 0;
    int min_rank = 0;
    std::size_t expected = 0;
    bool independent = false;
    std::optional<Vec> offending_sample;
    double tolerance = 0;
    bool passed() const { return independent && residual < tolerance; }
};

/// residual = max |s(x) grad C_i(x)|; independence = rank of stacked grad C_i
/// equals `expected` (2n - k) at every sample.
CasimirReport verify_casimirs(const CoinducedStructure& S, const std::vector<expr::Expression>& C,
                              const std::vector<Vec>& base_samples, std::size_t expected,
                              double tol = 1e-10, const Tolerances& rank_tol = {});

/// X_{C_i o F} = (dC_i/dx_a)(F) X_{F_a}, with exact Jacobians.
std::vector<VectorField> derived_fields(const std::vector<expr::Expression>& C,
                                        const std::vector<expr::Expression>& F,
                                        const symp::SymplecticChart& chart);

/// C_i o F as expressions on the chart.
std::vector<expr::Expression> pullback(const std::vector<expr::Expression>& C,
                                       const std::vector<expr::Expression>& F);

/// max |X_{C_i o F}(z) - hamiltonian_field(C_i o F)(z)| over samples.
double derived_field_mismatch(const std::vector<VectorField>& derived,
                              const std::vector<expr::Expression>& C,
                              const std::vector<expr::Expression>& F,
                              const symp::SymplecticChart& chart, const std::vector<Vec>& samples);

/// max |{C_i o F, C_j o F}| = max |Omega(X_j, X_i)| over samples.
double pairwise_commutation_of_derived(const std::vector<VectorField>& fields,
                                       const std::vector<Vec>& samples,
                                       const symp::SymplecticChart& chart);

}  // namespace integ::integrability
