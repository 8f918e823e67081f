#include <benchmark/benchmark.h>

#include "spinsim/spinsim.hpp"

using namespace spinsim;

namespace {

RateMatrix preset_rates(const ModelPreset& p, double b, double phi) {
  return build_rate_matrix(find_diagram(p.diagram_id), p.params,
                           triplet_eigensystem({1.0, p.e_over_d}, FieldVector::in_plane(b, phi)));
}

}  // namespace

static void BM_TripletEigensystem(benchmark::State& state) {
  double phi = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(triplet_eigensystem({1.0, -0.33}, FieldVector::in_plane(0.7, phi)));
    phi += 1e-3;
  }
}
BENCHMARK(BM_TripletEigensystem);

static void BM_SteadyStatePl(benchmark::State& state) {
  const ModelPreset p = singlet_ground_preset();
  for (auto _ : state) {
    const RateMatrix r = preset_rates(p, 0.5, 0.3);
    benchmark::DoNotOptimize(steady_pl(r, steady_state(r)));
  }
}
BENCHMARK(BM_SteadyStatePl);

static void BM_G2Eigen(benchmark::State& state) {
  const RateMatrix r = preset_rates(triplet_ground_preset(), 0.5, 0.3);
  const auto delays = log_delays(1e-10, 1e-2, 20);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_g2(r, delays, {.method = G2Method::Eigen}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(delays.size()));
}
BENCHMARK(BM_G2Eigen);

static void BM_G2RungeKutta(benchmark::State& state) {
  const RateMatrix r = preset_rates(triplet_ground_preset(), 0.5, 0.3);
  const auto delays = log_delays(1e-10, 1e-5, 10);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_g2(r, delays, {.method = G2Method::RungeKutta}));
}
BENCHMARK(BM_G2RungeKutta)->Unit(benchmark::kMillisecond);

static void BM_Correlator(benchmark::State& state) {
  const auto tags = poisson_stream(1e6, 1e6, 0.01 * static_cast<double>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(compute_g2(tags, Binning::log(10), {1e-9, 1e-5}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(tags.size()));
}
BENCHMARK(BM_Correlator)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

static void BM_EmpiricalFitOrder3(benchmark::State& state) {
  EmpiricalFit truth;
  truth.order = 3;
  truth.c = {1.58, 1.7, 0.09};
  truth.tau_s = {1.2e-9, 1.48e-6, 16e-6};
  const auto t = log_delays(1e-10, 2e-4, 20);
  FitData d;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    d.lo_s.push_back(t[i]);
    d.hi_s.push_back(t[i + 1]);
    d.values.push_back(truth.bin_average(t[i], t[i + 1]));
    d.sigma.push_back(1e-2);
  }
  for (auto _ : state) benchmark::DoNotOptimize(fit_empirical_order(d, 3));
}
BENCHMARK(BM_EmpiricalFitOrder3)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
