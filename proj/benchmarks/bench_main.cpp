#include <benchmark/benchmark.h>

#include <algorithm>

#include "rspec/coincidence.hpp"
#include "rspec/montecarlo.hpp"
#include "rspec/random.hpp"
#include "rspec/spectra.hpp"
#include "rspec/units.hpp"

namespace {

std::vector<std::int64_t> poisson_ps(double rate, double duration, std::uint64_t seed, std::int64_t shift = 0) {
  rspec::Rng rng(seed);
  std::vector<std::int64_t> out;
  for (double t = rng.exponential(rate); t < duration; t += rng.exponential(rate)) {
    out.push_back(std::llround(t * 1e12) + shift);
  }
  return out;
}

void BM_DifferenceHistogram(benchmark::State& state) {
  const auto t1 = poisson_ps(static_cast<double>(state.range(0)), 1.0, 1);
  const auto t2 = poisson_ps(1e4, 1.0, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rspec::difference_histogram(t1, t2, 100'000'000'000, 100'000));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(t1.size()));
}
BENCHMARK(BM_DifferenceHistogram)->Arg(10'000)->Arg(100'000)->Unit(benchmark::kMillisecond);

void BM_CountCoincidences(benchmark::State& state) {
  const auto t1 = poisson_ps(static_cast<double>(state.range(0)), 1.0, 3);
  auto t2 = poisson_ps(static_cast<double>(state.range(0)) / 2, 1.0, 4);
  for (std::size_t i = 0; i < t1.size(); i += 10) t2.push_back(t1[i] + 1'000);
  std::sort(t2.begin(), t2.end());
  for (auto _ : state) benchmark::DoNotOptimize(rspec::count_coincidences(t1, t2, 1'000, 5'000));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(t1.size() + t2.size()));
}
BENCHMARK(BM_CountCoincidences)->Arg(100'000)->Arg(1'000'000)->Unit(benchmark::kMillisecond);

void BM_ComputePsi(benchmark::State& state) {
  rspec::OpticalSetup setup;
  setup.omega_s0 = rspec::omega_from_nm(850.0);
  setup.omega_i0 = rspec::omega_from_nm(457.9) - setup.omega_s0;
  setup.omega_M = setup.omega_i0;
  setup.phi = rspec::SpectralFunction::gaussian(0.0, 5e13);
  setup.remote = rspec::SpectralFunction::gaussian(setup.omega_s0, 2.6e13);
  setup.monochromator = rspec::SpectralFunction::gaussian(0.0, 4e12);
  setup.signal_path = {5e-9, 2e-26, 1.0};
  const auto grid = rspec::FrequencyGrid::make(0.0, 4e14, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(rspec::compute_psi(grid, setup));
}
BENCHMARK(BM_ComputePsi)->Arg(1 << 12)->Arg(1 << 16)->Unit(benchmark::kMicrosecond);

void BM_GeneratePairs(benchmark::State& state) {
  rspec::SourceConfig c;
  c.pair_rate = static_cast<double>(state.range(0));
  c.duration = 1.0;
  c.omega_p = rspec::omega_from_nm(457.9);
  c.omega_s0 = rspec::omega_from_nm(850.0);
  c.omega_i0 = c.omega_p - c.omega_s0;
  c.phi = rspec::SpectralFunction::gaussian(0.0, 5e13);
  for (auto _ : state) {
    ++c.rng_seed;
    benchmark::DoNotOptimize(rspec::generate_pairs(c));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GeneratePairs)->Arg(100'000)->Arg(1'000'000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
