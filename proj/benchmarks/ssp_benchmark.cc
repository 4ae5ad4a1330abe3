// Copyright 2026 The o2il Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include "o2il/data.h"
#include "o2il/mdp.h"
#include "o2il/oracle.h"
#include "o2il/reward.h"
#include "o2il/ssp.h"

namespace o2il {
namespace {

SspProblem gridworld_problem(int size) {
  GridworldSpec spec;
  spec.width = size;
  spec.height = size;
  spec.goal = {size - 1, size - 1};
  const TabularMdp mdp = build_gridworld(spec);
  const int S = mdp.n_states();
  const int A = mdp.n_actions();
  const Dataset e = sample_trajectories(mdp, value_iteration(mdp, 1e-10), 5, 100, 1,
                                        Source::kExpert);
  const Dataset s = sample_trajectories(mdp, TabularPolicy::uniform(S, A), 200, 100, 2,
                                        Source::kSupplementary);
  const Dataset all = merge_datasets(e, s);
  const auto rho_e = empirical_distribution(all, SourceFilter::kExpert, S, A);
  const auto rho_o = empirical_distribution(all, SourceFilter::kAll, S, A);
  const Table reward =
      auxiliary_reward(fit_discriminator_closed_form(rho_e, rho_o, {0.1, 0.9}), S, A).values;
  return SspProblem::from_dataset(all, reward, S, A, mdp.discount(), 1e-6);
}

void BM_SolveSspExact(benchmark::State& state) {
  const SspProblem p = gridworld_problem(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_ssp(p, {}));
  state.SetLabel(std::to_string(p.n_states()) + " states");
}
BENCHMARK(BM_SolveSspExact)->Arg(4)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_DualValue(benchmark::State& state) {
  const SspProblem p = gridworld_problem(8);
  const Eigen::VectorXd nu = Eigen::VectorXd::Zero(p.n_states());
  for (auto _ : state) benchmark::DoNotOptimize(dual_value(p, nu, {}));
}
BENCHMARK(BM_DualValue);

void BM_PrimalOracle(benchmark::State& state) {
  const Fixture f = make_fixture({5, 3, 0.99, 3, 0.5});
  const Table reward = fixture_reward(f, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(primal_brute_force(f.mdp, reward, f.rho_o));
}
BENCHMARK(BM_PrimalOracle)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace o2il
