#include "integ/sampling.hpp"

#include <cmath>

#include "integ/errors.hpp"

namespace integ {

bool Box::contains(const Vec& z) const {
    return z.size() == lo.size() && (z.array() >= lo.array()).all() && (z.array() <= hi.array()).all();
}

bool Box::nondegenerate() const {
    return lo.size() == hi.size() && lo.size() > 0 && (hi.array() > lo.array()).all();
}

Vec Box::sample(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vec z(lo.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = lo[i] + (hi[i] - lo[i]) * u(rng);
    return z;
}

std::vector<Vec> sample_box(const Box& box, std::size_t count, Rng& rng,
                            const std::vector<expr::Expression>& singular_sets,
                            double reject_distance) {
    if (!box.nondegenerate()) throw PreconditionError("sample box is degenerate");
    std::vector<Vec> out;
    out.reserve(count);
    std::size_t attempts = 0;
    while (out.size() < count) {
        if (++attempts > 1000 * (count + 1))
            throw PreconditionError("sample box: rejection sampling found too few admissible points");
        Vec z = box.sample(rng);
        bool ok = true;
        for (const auto& s : singular_sets) {
            try {
                if (std::abs(s.value(z)) < reject_distance) ok = false;
            } catch (const DomainError&) {
                ok = false;
            }
            if (!ok) break;
        }
        if (ok) out.push_back(std::move(z));
    }
    return out;
}

}  // namespace integ
