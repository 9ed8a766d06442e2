#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "gibbsfwi/grid_wave.hpp"
#include "gibbsfwi/potentials.hpp"
#include "gibbsfwi/priors.hpp"
#include "gibbsfwi/signal.hpp"

using namespace gfwi;

namespace {

struct Setup {
  Grid2D grid;
  AcquisitionGeometry geometry;
  SolverOptions options;
};

Setup surface_setup(int nx, int nz, int n_sources) {
  Setup s;
  s.grid = Grid2D{nx, nz, 1.0 / (nx - 1), 0.5 / (nz - 1)};
  s.options.sponge_cells = 20;
  const double dt = 0.9 * max_stable_dt(s.grid, 4.5);
  s.geometry.nt = static_cast<int>(std::ceil(0.8 / dt));
  s.geometry.dt = 0.8 / s.geometry.nt;
  s.geometry.wavelets = {Wavelet::ricker(10.0)};
  for (int i = 0; i < n_sources; ++i) s.geometry.sources.push_back({{(i + 0.5) / n_sources, 0.03}, 0});
  for (int i = 0; i < 32; ++i) s.geometry.receivers.push_back({(i + 0.5) / 32, 0.03});
  return s;
}

std::vector<double> layered(const Grid2D& g) {
  std::vector<double> m(g.size());
  for (int iz = 0; iz < g.nz; ++iz)
    for (int ix = 0; ix < g.nx; ++ix) {
      const double v = 2.0 + 1.5 * iz / (g.nz - 1.0);
      m[g.index(ix, iz)] = 1.0 / (v * v);
    }
  return m;
}

void BM_Forward(benchmark::State& state) {
  const auto s = surface_setup(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)) / 2, 1);
  const WaveSolver solver(s.grid, s.geometry, s.options, 4.5);
  const auto m = layered(s.grid);
  for (auto _ : state) benchmark::DoNotOptimize(solver.forward(m));
  state.counters["nt"] = s.geometry.nt;
}
BENCHMARK(BM_Forward)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ForwardAdjoint(benchmark::State& state) {
  const auto s = surface_setup(64, 32, 1);
  const WaveSolver solver(s.grid, s.geometry, s.options, 4.5);
  const auto m = layered(s.grid);
  ForwardHistory history;
  Seismogram r = solver.forward(m, &history);
  for (auto _ : state) benchmark::DoNotOptimize(solver.adjoint(m, r, history));
}
BENCHMARK(BM_ForwardAdjoint)->Unit(benchmark::kMillisecond);

std::vector<double> wavy(int n, double shift) {
  std::vector<double> v(n);
  for (int j = 0; j < n; ++j) v[j] = std::sin(0.05 * j + shift) * std::exp(-1e-4 * (j - n / 2.0) * (j - n / 2.0));
  return v;
}

void BM_W2Trace(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const double dt = 1.0 / n;
  const auto spec = NormalizerSpec::square_plus_delta(0.1);
  const auto f = p_sigma(wavy(n, 0.0), dt, spec), g = p_sigma(wavy(n, 0.4), dt, spec);
  for (auto _ : state) benchmark::DoNotOptimize(w2_1d(f, g));
}
BENCHMARK(BM_W2Trace)->Arg(400)->Arg(1600)->Arg(6400);

void BM_Hm1Trace(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto h = wavy(n, 0.2);
  remove_zero_frequency_inplace(h);
  for (auto _ : state) benchmark::DoNotOptimize(hminus1_norm(h, 1.0 / n));
}
BENCHMARK(BM_Hm1Trace)->Arg(400)->Arg(1600)->Arg(6400);

void BM_MaternSample(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Grid2D g{n, n / 2, 1.0 / (n - 1), 0.5 / (n / 2 - 1)};
  const MaternField field(g, MaternSpec{0.7, 3.0, 0.05});
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(field.sample(rng));
}
BENCHMARK(BM_MaternSample)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
