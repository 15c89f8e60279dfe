#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "kacsim/assignment.hpp"
#include "kacsim/circle.hpp"
#include "kacsim/geometry.hpp"
#include "kacsim/kac.hpp"
#include "kacsim/rng.hpp"
#include "kacsim/vec3.hpp"
#include "kacsim/wasserstein.hpp"

namespace {

kacsim::PointCloud gaussian_cloud(std::size_t n, std::uint64_t seed) {
  kacsim::Rng rng(seed);
  kacsim::PointCloud out(n);
  for (auto& v : out) v = rng.gauss3(1.0);
  return out;
}

void BM_exact_transport(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = gaussian_cloud(n, 11);
  const auto b = gaussian_cloud(n, 12);
  for (auto _ : state) {
    auto res = kacsim::w2_exact(a, b);
    benchmark::DoNotOptimize(res.w2sq);
  }
  state.SetComplexityN(state.range(0));
}

void BM_collision_step(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  kacsim::AngularKernel kernel(0.5);
  kacsim::Rng init(21);
  auto ens = kacsim::init_gaussian(n, init);
  kacsim::EventStream stream(n, kernel, 20.0, kacsim::Rng(22));
  double horizon = 0.0;
  for (auto _ : state) {
    horizon += 2.0 / (static_cast<double>(n) * 20.0);
    ens = kacsim::run(std::move(ens), horizon, stream);
    benchmark::DoNotOptimize(ens.v.data());
  }
}

void BM_azimuth_transport(benchmark::State& state) {
  kacsim::Rng rng(31);
  const kacsim::Vec3 x = rng.gauss3(1.0);
  const kacsim::Vec3 y = rng.gauss3(1.0);
  double phi = 0.3;
  for (auto _ : state) {
    phi = kacsim::varphi(x, y, phi);
    benchmark::DoNotOptimize(phi);
  }
}

void BM_circle_transport(benchmark::State& state) {
  kacsim::Rng rng(41);
  const auto c1 = kacsim::circle_of(rng.gauss3(1.0), rng.gauss3(1.0), 0.7);
  const auto c2 = kacsim::circle_of(rng.gauss3(1.0), rng.gauss3(1.0), 1.1);
  for (auto _ : state) {
    auto d = kacsim::w2_circles(c1, c2);
    benchmark::DoNotOptimize(d);
  }
}

void BM_angle_inversion(benchmark::State& state) {
  kacsim::AngularKernel kernel(0.5);
  double z = 0.0;
  for (auto _ : state) {
    z += 0.37;
    if (z > 19.0) z -= 19.0;
    benchmark::DoNotOptimize(kernel.inverse_tail_mass(z + 0.5));
  }
}

}  // namespace

BENCHMARK(BM_exact_transport)->Arg(512)->Arg(1024)->Arg(2048)->Arg(4096)->Unit(benchmark::kMillisecond)->Complexity();
BENCHMARK(BM_collision_step)->Arg(1024);
BENCHMARK(BM_azimuth_transport);
BENCHMARK(BM_circle_transport);
BENCHMARK(BM_angle_inversion);

BENCHMARK_MAIN();
