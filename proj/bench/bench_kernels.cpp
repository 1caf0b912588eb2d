// Serial reference kernels against their OpenMP counterparts.

#include "tvpursuit/kernels.hpp"
#include "tvpursuit/problem_gen.hpp"
#include "tvpursuit/reformulation.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace tvp;

struct AugmentedFixture {
  Graph g;
  DesignSet designs;
  AugmentedSystem aug;
  kernels::BlockLayout layout;
  Vector z;
  Vector r;

  explicit AugmentedFixture(int n)
      : g(make_path(n)),
        designs(gen_designs(n, 256, 80, 48, false, 7)),
        aug(g, designs),
        layout(aug.layout()),
        z(Vector::Random(aug.cols())),
        r(Vector::Random(aug.rows())) {}
};

template <void (*Kernel)(const kernels::BlockLayout&, const Eigen::Ref<const Vector>&, Eigen::Ref<Vector>)>
void bm_apply(benchmark::State& state) {
  const AugmentedFixture f(static_cast<int>(state.range(0)));
  Vector out(f.aug.rows());
  for (auto _ : state) {
    Kernel(f.layout, f.z, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <void (*Kernel)(const kernels::BlockLayout&, const Eigen::Ref<const Vector>&, Eigen::Ref<Vector>)>
void bm_adjoint(benchmark::State& state) {
  const AugmentedFixture f(static_cast<int>(state.range(0)));
  Vector out(f.aug.cols());
  for (auto _ : state) {
    Kernel(f.layout, f.r, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <void (*Kernel)(RowMatrix&, Eigen::Index, Eigen::Index)>
void bm_pivot(benchmark::State& state) {
  const auto m = static_cast<Eigen::Index>(state.range(0));
  const RowMatrix base = RowMatrix::Random(m, 4 * m) + RowMatrix::Constant(m, 4 * m, 2.0);
  RowMatrix t = base;
  for (auto _ : state) {
    state.PauseTiming();
    t = base;
    state.ResumeTiming();
    Kernel(t, m / 2, m);
    benchmark::DoNotOptimize(t.data());
  }
}

template <kernels::RipScan (*Kernel)(const Matrix&, int)>
void bm_rip(benchmark::State& state) {
  const Matrix a = gen_design(20, 16, 3);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(a, static_cast<int>(state.range(0))));
}

}  // namespace

BENCHMARK(bm_apply<kernels::serial::augmented_apply>)->Name("augmented_apply/serial")->Arg(4)->Arg(16);
BENCHMARK(bm_apply<kernels::parallel::augmented_apply>)->Name("augmented_apply/parallel")->Arg(4)->Arg(16);
BENCHMARK(bm_adjoint<kernels::serial::augmented_adjoint>)->Name("augmented_adjoint/serial")->Arg(4)->Arg(16);
BENCHMARK(bm_adjoint<kernels::parallel::augmented_adjoint>)->Name("augmented_adjoint/parallel")->Arg(4)->Arg(16);
BENCHMARK(bm_pivot<kernels::serial::tableau_pivot>)->Name("tableau_pivot/serial")->Arg(200)->Arg(800);
BENCHMARK(bm_pivot<kernels::parallel::tableau_pivot>)->Name("tableau_pivot/parallel")->Arg(200)->Arg(800);
BENCHMARK(bm_rip<kernels::serial::rip_scan>)->Name("rip_scan/serial")->Arg(3)->Arg(5);
BENCHMARK(bm_rip<kernels::parallel::rip_scan>)->Name("rip_scan/parallel")->Arg(3)->Arg(5);

BENCHMARK_MAIN();
