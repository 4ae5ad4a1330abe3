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

#include "o2il/offrl.h"

#include <cmath>

#include <fmt/format.h>

#include "o2il/error.h"

namespace o2il {

void OffRlConfig::validate() const {
  if (!(alpha > 0.0)) throw ValidationError("offline RL: alpha must be positive");
  if (!(smoothing >= 0.0)) throw ValidationError("offline RL: smoothing must be >= 0");
  if (!(discount > 0.0 && discount <= 1.0)) {
    throw ValidationError("offline RL: discount must lie in (0, 1]");
  }
}

Table reward_table_from_data(const Dataset& data, int n_states, int n_actions) {
  Table sum = Table::Zero(n_states, n_actions);
  Table count = Table::Zero(n_states, n_actions);
  for (std::size_t i = 0; i < data.transitions.size(); ++i) {
    const Transition& t = data.transitions[i];
    if (!t.reward) {
      throw ValidationError(fmt::format("offline RL: transition {} has no reward", i));
    }
    const int s = point_index(t.state);
    const int a = point_index(t.action);
    if (s < 0 || s >= n_states || a < 0 || a >= n_actions) {
      throw ValidationError(fmt::format("offline RL: transition {} out of range", i));
    }
    sum(s, a) += *t.reward;
    count(s, a) += 1.0;
  }
  return (count.array() > 0.0).select(sum.array() / count.array().max(1.0), 0.0);
}

SspProblem offline_rl_problem(const Dataset& data, int n_states, int n_actions,
                              const OffRlConfig& config, const TabularMdp* mdp) {
  config.validate();
  if (data.empty()) throw ValidationError("offline RL: empty dataset");
  if (mdp == nullptr) {
    return SspProblem::from_dataset(data, reward_table_from_data(data, n_states, n_actions),
                                    n_states, n_actions, config.discount,
                                    config.smoothing);
  }
  if (mdp->n_states() != n_states || mdp->n_actions() != n_actions) {
    throw ValidationError("offline RL: MDP shape mismatch");
  }
  EmpiricalOptions options;
  options.smoothing = config.smoothing;
  const Table rho_o =
      empirical_distribution(data, SourceFilter::kAll, n_states, n_actions, options).probs;
  const Table reward =
      mdp->has_reward() ? mdp->reward() : reward_table_from_data(data, n_states, n_actions);
  return SspProblem::from_mdp(*mdp, rho_o, reward);
}

SspSolution solve_offline_rl(const Dataset& data, int n_states, int n_actions,
                             const OffRlConfig& config, const TabularMdp* mdp) {
  const SspProblem problem = offline_rl_problem(data, n_states, n_actions, config, mdp);
  SspConfig ssp = config.ssp;
  ssp.alpha = config.alpha;
  ssp.beta = 0.0;
  return solve_ssp(problem, ssp, ssp.mode == SspMode::kStochastic ? &data : nullptr);
}

TabularPolicy extract_offline_rl_policy(const Table& rho_o, const Table& y) {
  if (!y.allFinite()) throw ValidationError("offline RL: y is not finite");
  return extract_policy_closed_form(rho_o, y);
}

SoftmaxPolicy extract_offline_rl_policy(const Dataset& data, const Table& y,
                                        SoftmaxPolicy init,
                                        const ExtractionConfig& config) {
  if (!y.allFinite()) throw ValidationError("offline RL: y is not finite");
  return extract_policy_weighted_bc(data, y, std::move(init), config);
}

}  // namespace o2il
