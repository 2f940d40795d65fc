#include <benchmark/benchmark.h>

#include "twistlab/carleman.hpp"
#include "twistlab/experiments.hpp"
#include "twistlab/forward.hpp"
#include "twistlab/operators.hpp"

using namespace twistlab;

namespace {

ExperimentConfig small_cfg() {
  auto c = default_config("carleman");
  c.grid_nx = c.grid_ny = 12;
  c.grid_nz = 32;
  return c;
}

void bench_assemble_operator(benchmark::State& state) {
  const auto c = small_cfg();
  const Scene sc = build_scene(c);
  for (auto _ : state) {
    auto H = assemble_H(sc.twin, sc.grid);
    benchmark::DoNotOptimize(H.A.nonZeros());
  }
}
BENCHMARK(bench_assemble_operator)->Unit(benchmark::kMillisecond);

void bench_time_step(benchmark::State& state) {
  const auto c = small_cfg();
  const Scene sc = build_scene(c);
  const auto H = assemble_H(sc.twin, sc.grid);
  const int steps = int(state.range(0));
  for (auto _ : state) {
    auto q = crank_nicolson_solve(H, sc.q0, BoundaryData{}, steps * c.time_dt,
                                  c.time_dt);
    benchmark::DoNotOptimize(q.levels.back().squaredNorm());
  }
}
BENCHMARK(bench_time_step)->Arg(8)->Unit(benchmark::kMillisecond);

void bench_weighted_functional(benchmark::State& state) {
  const auto c = small_cfg();
  const Scene sc = build_scene(c);
  const auto metric = assemble_metric(sc.twin, sc.grid);
  const auto lap = assemble_laplace_beltrami(metric, sc.grid);
  const auto H = assemble_H(sc.twin, sc.grid);
  const auto wp = select_weight_point(sc.grid, c.weight_L, c.profile_ell,
                                      WeightMode::interior, c.weight_d3,
                                      c.weight_gamma);
  const auto wf = build_weights(wp, sc.grid, c.time_T, c.time_dt, sc.twin);
  const auto hyp = verify_hypotheses(metric, sc.twin, wf);

  RadialRegionPair rg;
  rg.cx = c.cutoff_cx;
  rg.cy = c.cutoff_cy;
  rg.r_one = c.cutoff_r_one;
  rg.r_zero = c.cutoff_r_zero;
  const auto chi = build_cutoffs(rg, c.profile_ell, c.weight_L, sc.grid);
  CVec chiv(sc.grid.size());
  for (int g = 0; g < sc.grid.size(); ++g) chiv[g] = chi.chi(sc.grid.coords(g));

  auto q = symmetrize_time(
      crank_nicolson_solve(H, sc.q0, BoundaryData{}, c.time_T, c.time_dt));
  for (auto& lev : q.levels) lev = lev.cwiseProduct(chiv);

  for (auto _ : state) {
    const auto terms = carleman_functional(q, lap, metric, wf, 8.0, &hyp);
    benchmark::DoNotOptimize(terms.lhs());
  }
}
BENCHMARK(bench_weighted_functional)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
