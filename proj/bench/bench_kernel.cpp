// Serial reference vs OpenMP evidence kernel, plus the per-dataset cost of
// each procedure.

#include <benchmark/benchmark.h>

#include <cmath>

#include "equicalib/equivtests.hpp"
#include "equicalib/simulation.hpp"

namespace {

using namespace equicalib;

EvidenceRequest boundary_request(int nsim) {
  EvidenceRequest r;
  r.n = 100;
  r.delta = 0.3;
  r.m = 0.3;
  r.prior_scales = {0.5 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 2.0 / std::sqrt(2.0)};
  r.nsim = nsim;
  r.seed = 42;
  return r;
}

void BM_KernelSerial(benchmark::State& state) {
  const EvidenceRequest request = boundary_request(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(simulate_evidence_serial(request));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KernelSerial)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_KernelOpenMP(benchmark::State& state) {
  const EvidenceRequest request = boundary_request(200);
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(simulate_evidence(request, threads));
  state.SetItemsProcessed(state.iterations() * 200);
}
BENCHMARK(BM_KernelOpenMP)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

const SummaryStats kData{100, 100, 0.12, 0.0, 1.03};

void BM_Tost(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(tost_p(kData, 0.3));
}
BENCHMARK(BM_Tost);

void BM_Optimal(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(optimal_p(kData, 0.3));
}
BENCHMARK(BM_Optimal);

void BM_BayesianEvidence(benchmark::State& state) {
  const PriorSpec prior(1.0 / std::sqrt(2.0));
  for (auto _ : state) benchmark::DoNotOptimize(bayesian_evidence(kData, 0.3, prior));
}
BENCHMARK(BM_BayesianEvidence)->Unit(benchmark::kMicrosecond);

void BM_NoncentralTKernel(benchmark::State& state) {
  double t = 1.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(numerics::noncentral_t_log_kernel(t, 198, 2.1));
    t += 1e-9;
  }
}
BENCHMARK(BM_NoncentralTKernel);

}  // namespace

BENCHMARK_MAIN();
