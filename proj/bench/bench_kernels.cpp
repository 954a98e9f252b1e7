// OpenMP kernels against their serial references. On a single core the two
// columns should agree; the ratio is the parallel speed-up elsewhere.
#include <benchmark/benchmark.h>

#include "rossbytrap/spectral.hpp"
#include "rossbytrap/trapped_set.hpp"

using namespace rossbytrap;

namespace {

const CoriolisProfile& prof() {
  static const CoriolisProfile p = CoriolisProfile::shifted_sine();
  return p;
}

StateField packet(double eps) {
  Grid2D g = Grid2D::for_epsilon(eps);
  GaussianWkb gw;
  gw.xi1 = 1.75;
  return wkb_initial(prof(), gaussian_wkb(prof(), gw), g).field;
}

template <bool Parallel>
void BM_Evolve(benchmark::State& st) {
  const double eps = 1.0 / static_cast<double>(st.range(0));
  const StateField U = packet(eps);
  const std::vector<double> times{0.0, 1.0 / eps, 10.0 / eps};
  EvolveOptions o;
  o.filter = BranchFilter::Rossby;
  for (auto _ : st) {
    Evolution ev = Parallel ? evolve(prof(), U, times, o) : evolve_serial(prof(), U, times, o);
    benchmark::DoNotOptimize(ev.norm(2));
  }
}

template <bool Parallel>
void BM_SampleLambda(benchmark::State& st) {
  LambdaGrid g;
  g.n_x2 = static_cast<int>(st.range(0));
  g.n_xi2 = static_cast<int>(st.range(0));
  LambdaOptions o;
  o.cross_check_time = false;
  for (auto _ : st) {
    LambdaCloud c = Parallel ? sample_lambda(prof(), g, o) : sample_lambda_serial(prof(), g, o);
    benchmark::DoNotOptimize(c.summary.points);
  }
}

template <bool Parallel>
void BM_Husimi(benchmark::State& st) {
  const StateField U = packet(1.0 / 8);
  HusimiOptions o{4, 4, 2, 2, std::make_pair(0, 40), std::make_pair(-8, 8)};
  for (auto _ : st) {
    HusimiDensity h = Parallel ? husimi(U, o) : husimi_serial(U, o);
    benchmark::DoNotOptimize(h.total());
  }
}

}  // namespace

BENCHMARK(BM_Evolve<false>)->Name("evolve/serial")->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Evolve<true>)->Name("evolve/openmp")->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SampleLambda<false>)->Name("sample_lambda/serial")->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SampleLambda<true>)->Name("sample_lambda/openmp")->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Husimi<false>)->Name("husimi/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Husimi<true>)->Name("husimi/openmp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
