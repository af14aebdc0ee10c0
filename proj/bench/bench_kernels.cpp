// Serial vs OpenMP timings of the sample-parallel kernels. The second
// benchmark argument selects the path: 0 = serial reference, 1 = parallel.

#include <benchmark/benchmark.h>

#include "integ/fibergeom.hpp"
#include "integ/flows.hpp"
#include "integ/integrability.hpp"
#include "integ/sampling.hpp"
#include "integ/symplectic.hpp"

using namespace integ;

namespace {

Execution policy(const benchmark::State& state) {
    return state.range(1) ? Execution::Parallel : Execution::Serial;
}

const std::vector<std::string>& central_coords() {
    static const std::vector<std::string> c{"p1", "p2", "p3", "q1", "q2", "q3"};
    return c;
}

std::vector<expr::Expression> central_field() {
    const auto& c = central_coords();
    return {expr::parse("(p1^2 + p2^2 + p3^2)/2 - 1/sqrt(q1^2 + q2^2 + q3^2)", c),
            expr::parse("q2*p3 - q3*p2", c), expr::parse("q3*p1 - q1*p3", c),
            expr::parse("q1*p2 - q2*p1", c)};
}

std::vector<expr::Expression> two_oscillators() {
    const std::vector<std::string> c{"p1", "p2", "q1", "q2"};
    return {expr::parse("(p1^2 + q1^2)/2", c), expr::parse("(p2^2 + 4*q2^2)/2", c)};
}

Box cube(std::size_t d, double lo, double hi) {
    return {Vec::Constant(static_cast<Eigen::Index>(d), lo), Vec::Constant(static_cast<Eigen::Index>(d), hi)};
}

void BM_Involution(benchmark::State& state) {
    const auto F = central_field();
    const auto chart = symp::SymplecticChart::canonical(3);
    Rng rng(1);
    const auto samples = sample_box(cube(6, 0.5, 1.5), static_cast<std::size_t>(state.range(0)), rng);
    // {H, L_i} = 0 but {L1, L2} != 0; the bracket sweep runs either way.
    for (auto _ : state)
        benchmark::DoNotOptimize(integrability::check_involution(F, samples, chart, {}, policy(state)));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_DetectLattice(benchmark::State& state) {
    const auto F = two_oscillators();
    const auto chart = symp::SymplecticChart::canonical(2);
    std::vector<VectorField> X;
    for (const auto& f : F) X.push_back(symp::hamiltonian_field(f, chart));
    const flows::FlowAction action(std::move(X), (Vec(4) << 1, 1, 0, 0).finished(), {.tol = 1e-10});
    fibergeom::LatticeOptions options;
    options.radius = static_cast<double>(state.range(0));
    options.grid_step = 0.2;
    for (auto _ : state)
        benchmark::DoNotOptimize(fibergeom::detect_lattice(action, options, policy(state)));
}

void BM_Completeness(benchmark::State& state) {
    const std::vector<std::string> c{"p", "q"};
    const auto X = symp::hamiltonian_field(expr::parse("p^3/3 + q^2/2", c), symp::SymplecticChart(1, c));
    Rng rng(2);
    const auto points = sample_box(cube(2, -1, 1), static_cast<std::size_t>(state.range(0)), rng);
    for (auto _ : state)
        benchmark::DoNotOptimize(flows::completeness_probe(X, points, 10.0, 1e6, {}, policy(state)));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_Involution)->ArgsProduct({{256, 2048}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DetectLattice)->ArgsProduct({{4, 7}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Completeness)->ArgsProduct({{64, 256}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
