// Serial reference loops against their OpenMP variants. Arg 0 selects the
// serial path, arg 1 the parallel one.

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "kinreg/claw.hpp"
#include "kinreg/exponents.hpp"
#include "kinreg/lpa.hpp"
#include "kinreg/nondeg.hpp"

using kinreg::Exec;
namespace lp = kinreg::lpa;

namespace {

Exec exec_of(const benchmark::State& s) { return s.range(0) == 0 ? Exec::Serial : Exec::Parallel; }

lp::GridFunction noise(int dims, std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  auto u = lp::GridFunction::zeros(dims, n, {1.0, 1.0});
  for (auto& v : u.values) v = d(rng);
  return u;
}

void BM_OmegaCurve(benchmark::State& s) {
  const auto f = kinreg::nondeg::DriftField::registered("k_lambda_squared", {0.5, 1.0}, {{0.0}, {1.0}},
                                                        {{-1.0}, {1.0}});
  const auto nus = kinreg::nondeg::geometric_nus(0.25, 0.5, 8);
  for (auto _ : s) benchmark::DoNotOptimize(kinreg::nondeg::omega_curve(f, nus, {9, 360, 2048}, exec_of(s)));
}

void BM_DyadicSpectrum(benchmark::State& s) {
  const auto u = noise(2, 512);
  const lp::DyadicFilterBank bank(static_cast<int>(std::floor(lp::nyquist_band(u))));
  for (auto _ : s) benchmark::DoNotOptimize(lp::dyadic_spectrum(u, bank, 1.9, {3, 0}, exec_of(s)));
}

void BM_Gagliardo(benchmark::State& s) {
  const auto u = noise(1, 2048);
  for (auto _ : s) benchmark::DoNotOptimize(lp::gagliardo_seminorm(u, 0.4, 2.0, exec_of(s)));
}

void BM_LlfStep(benchmark::State& s) {
  const auto flux = kinreg::claw::FluxSpec::from_id("burgers", 0.5, 1.0);
  const auto u0 = noise(1, 1 << 16).values;
  std::vector<double> next, iface;
  for (auto _ : s)
    benchmark::DoNotOptimize(kinreg::claw::llf_step(flux, 1.0 / (1 << 16), 1e-6, u0, next, iface, exec_of(s)));
}

void BM_BetaLandscape(benchmark::State& s) {
  const kinreg::exponents::ProblemParams p{0.5, 1.5, 3, 1};
  for (auto _ : s) benchmark::DoNotOptimize(kinreg::exponents::beta_landscape(p, 200, 200, exec_of(s)));
}

}  // namespace

BENCHMARK(BM_OmegaCurve)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DyadicSpectrum)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Gagliardo)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LlfStep)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_BetaLandscape)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
