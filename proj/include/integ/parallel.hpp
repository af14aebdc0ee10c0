#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace integ {

/// Execution policy for the sample-parallel kernels. `Serial` is the reference
/// path the tests compare the OpenMP path against; both produce identical
/// results because every index writes only its own slot.
enum class Execution { Serial, Parallel };

/// Calls fn(i) for i in [0, n). Exceptions thrown by fn are captured per index
/// and the one with the smallest index is rethrown after the loop, so error
/// reporting does not depend on thread scheduling.
template <class Fn>
void for_each_index(std::size_t n, Execution exec, Fn&& fn) {
    if (exec == Execution::Serial || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    const long count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < count; ++i) {
        try {
            fn(static_cast<std::size_t>(i));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace integ
