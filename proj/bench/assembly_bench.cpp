// Serial reference kernels against the OpenMP kernels.
//   parasrc_bench --benchmark_filter=Matrix
// Thread count follows OMP_NUM_THREADS.

#include "parasrc/inverse.hpp"

#include <benchmark/benchmark.h>

using namespace parasrc;

namespace {

struct Case {
    ProblemConfig config;
    ProblemSetup setup;
    Discretization disc;
};

const Case& get_case(int example) {
    static const Case cases[] = {
        [] {
            ProblemConfig c = example_config(1);
            c.h_den = 80;
            c.tau_den = 80;
            return Case{c, make_problem(c), make_discretization(c)};
        }(),
        [] {
            ProblemConfig c = example_config(3);
            c.h_den = 12;
            c.tau_den = 30;
            return Case{c, make_problem(c), make_discretization(c)};
        }(),
    };
    return cases[example == 1 ? 0 : 1];
}

void BM_Matrix(benchmark::State& state) {
    const Case& k = get_case(static_cast<int>(state.range(0)));
    const Execution exec = state.range(1) ? Execution::Parallel : Execution::Serial;
    const FormParameters form{k.config.mode, k.config.gamma_f, k.config.gamma_u};
    for (auto _ : state) benchmark::DoNotOptimize(assemble_matrix(k.disc, k.setup.op, k.setup.R, form, exec));
    state.counters["unknowns"] = k.disc.size();
}

void BM_Rhs(benchmark::State& state) {
    const Case& k = get_case(static_cast<int>(state.range(0)));
    const Execution exec = state.range(1) ? Execution::Parallel : Execution::Serial;
    for (auto _ : state) benchmark::DoNotOptimize(assemble_rhs(k.disc, k.setup.op, k.setup.data, k.config.mode, exec));
}

} // namespace

BENCHMARK(BM_Matrix)->ArgNames({"example", "parallel"})->ArgsProduct({{1, 3}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Rhs)->ArgNames({"example", "parallel"})->ArgsProduct({{1, 3}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
