#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "integ/expr.hpp"
#include "integ/types.hpp"

namespace integ {

using Rng = std::mt19937_64;

/// Axis-aligned box. Contractible, so any claim checked on it is local to it.
struct Box {
    Vec lo, hi;

    std::size_t dimension() const { return static_cast<std::size_t>(lo.size()); }
    bool contains(const Vec& z) const;
    bool nondegenerate() const;
    Vec sample(Rng& rng) const;
};

/// Uniform samples in `box`, rejecting points where |s(z)| < reject_distance for
/// any of the singular-set expressions (or where they fail to evaluate).
std::vector<Vec> sample_box(const Box& box, std::size_t count, Rng& rng,
                            const std::vector<expr::Expression>& singular_sets = {},
                            double reject_distance = 1e-6);

}  // namespace integ
