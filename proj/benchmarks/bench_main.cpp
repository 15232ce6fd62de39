#include <benchmark/benchmark.h>

#include <vector>

#include "rank_sde/random.hpp"
#include "rank_sde/scheme.hpp"
#include "rank_sde/transform.hpp"

using namespace rank_sde;

namespace {

PlanarSpec atlas_spec() {
  return {CoefficientFamily::constant(1.0, FamilyRole::drift),
          CoefficientFamily::constant(-1.0, FamilyRole::drift),
          CoefficientFamily::constant(1.0, FamilyRole::diffusion),
          CoefficientFamily::constant(1.0, FamilyRole::diffusion), false};
}

const DistortionMap& atlas_map() {
  static const DistortionMap map(atlas_spec(),
                                 make_transform_params(atlas_spec(), {-5.0, 5.0}, 1001, std::nullopt));
  return map;
}

SystemSpec logistic_system(std::size_t n) {
  SystemSpec spec;
  spec.n_particles = n;
  spec.positivity_wrap = true;
  for (std::size_t k = 1; k <= n; ++k) {
    spec.drifts.emplace_back(FamilyKind::logistic2, FamilyRole::drift,
                             std::vector<double>{0.7 + 0.1 * double(k) / double(n), 10.0});
    spec.diffusions.emplace_back(FamilyKind::logistic2, FamilyRole::diffusion,
                                 std::vector<double>{0.125, 10.0});
    spec.x0.push_back(0.1 * double(k));
  }
  return spec;
}

}  // namespace

static void BM_Philox(benchmark::State& state) {
  Philox4x32::Counter ctr{0, 0, 0, 0};
  for (auto _ : state) {
    ctr = Philox4x32::apply(ctr, {0x12345678u, 0x9abcdef0u});
    benchmark::DoNotOptimize(ctr);
  }
}
BENCHMARK(BM_Philox);

static void BM_BrownianIncrements(benchmark::State& state) {
  std::vector<double> dw(static_cast<std::size_t>(state.range(0)));
  std::uint64_t step = 0;
  for (auto _ : state) {
    brownian_increments(7, 0, step++, 1e-3, dw);
    benchmark::DoNotOptimize(dw.data());
  }
}
BENCHMARK(BM_BrownianIncrements)->Arg(2)->Arg(8);

static void BM_Inverse(benchmark::State& state) {
  const auto& map = atlas_map();
  const double c = map.params().c;
  // Points inside the band, where the root find does work.
  const Vec2 z = map.G({0.3, 0.3 + 0.5 * c});
  for (auto _ : state) benchmark::DoNotOptimize(map.inverse(z));
}
BENCHMARK(BM_Inverse);

static void BM_ZCoefficients(benchmark::State& state) {
  const auto& map = atlas_map();
  const Vec2 x{0.3, 0.3 + 0.5 * map.params().c};
  for (auto _ : state) benchmark::DoNotOptimize(map.z_coefficients_at(x));
}
BENCHMARK(BM_ZCoefficients);

static void BM_NaiveStep(benchmark::State& state) {
  const auto spec = logistic_system(static_cast<std::size_t>(state.range(0)));
  NaiveStepper stepper(spec);
  stepper.reset(spec.x0);
  std::vector<double> dw(spec.n_particles);
  std::uint64_t step = 0;
  for (auto _ : state) {
    brownian_increments(3, 0, step++, 1e-3, dw);
    stepper.step(1e-3, dw);
    benchmark::DoNotOptimize(stepper.state().data());
  }
}
BENCHMARK(BM_NaiveStep)->Arg(2)->Arg(8);

static void BM_TransformedStep(benchmark::State& state) {
  TransformedStepper stepper(atlas_map());
  const std::vector<double> x0{0.0, 0.1};
  stepper.reset(x0);
  std::vector<double> dw(2);
  std::uint64_t step = 0;
  for (auto _ : state) {
    brownian_increments(3, 0, step++, 1e-3, dw);
    stepper.step(1e-3, dw);
    benchmark::DoNotOptimize(stepper.state().data());
  }
}
BENCHMARK(BM_TransformedStep);
BENCHMARK_MAIN();
