// Copyright 2026 The hybridpred Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serial reference vs OpenMP variant of the hot kernels.

#include "hybridpred/kernels.hpp"
#include "hybridpred/metrics.hpp"
#include "hybridpred/synthetic.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

using namespace hybridpred;  // NOLINT

namespace
{

std::vector<double> random_matrix(std::size_t n, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (auto & x : v) {
    x = g(rng);
  }
  return v;
}

template <auto Kernel>
void bm_matmul(benchmark::State & state)
{
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n * n, 1), b = random_matrix(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    Kernel(a, b, c, n, n, n, false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
}

struct MetricsFixture
{
  Scene scene;
  PredictionSet set;

  explicit MetricsFixture(std::size_t n_agents)
  {
    scene = generate_synthetic_scene(SceneKind::straight, n_agents, 5);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (const auto & track : scene.agents) {
      AgentPrediction p;
      p.agent_id = track.id;
      p.ground_truth = ground_truth_trajectory(track);
      const Trajectory gt = ground_truth_trajectory(track);
      for (int m = 0; m < 6; ++m) {
        Trajectory t = gt;
        for (auto & pt : t) {
          pt.x += noise(rng);
          pt.y += noise(rng);
        }
        p.modes.push_back(t);
        p.probabilities.push_back(1.0 / 6.0);
      }
      set.agents.push_back(std::move(p));
    }
  }
};

template <bool Parallel>
void bm_metrics(benchmark::State & state)
{
  const MetricsFixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto m = Parallel ? agent_metrics_parallel(f.set, f.scene) : agent_metrics_serial(f.set, f.scene);
    benchmark::DoNotOptimize(m.data());
  }
}

}  // namespace

BENCHMARK(bm_matmul<kernels::matmul_serial>)->Name("matmul/serial")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(bm_matmul<kernels::matmul_parallel>)->Name("matmul/parallel")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(bm_matmul<kernels::matmul_nt_serial>)->Name("matmul_nt/serial")->Arg(128);
BENCHMARK(bm_matmul<kernels::matmul_nt_parallel>)->Name("matmul_nt/parallel")->Arg(128);
BENCHMARK(bm_metrics<false>)->Name("metrics/serial")->Arg(4)->Arg(8);
BENCHMARK(bm_metrics<true>)->Name("metrics/parallel")->Arg(4)->Arg(8);

BENCHMARK_MAIN();
