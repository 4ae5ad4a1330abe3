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

#ifndef O2IL_OFFRL_H_
#define O2IL_OFFRL_H_

#include <vector>

#include "o2il/data.h"
#include "o2il/mdp.h"
#include "o2il/policy.h"
#include "o2il/ssp.h"
#include "o2il/tables.h"

namespace o2il {

// Reward-regularized variant: max E_rho[R] - alpha * KL(rho || rho_o).
struct OffRlConfig {
  double alpha = 1.0;
  SspConfig ssp;
  // Added to the empirical union distribution before normalizing.
  double smoothing = 0.0;
  // Used only when no MDP is supplied.
  double discount = 0.99;

  void validate() const;
};

// Mean logged reward per pair; unseen pairs get zero.
Table reward_table_from_data(const Dataset& data, int n_states, int n_actions);

// Builds the SSP problem. With an MDP the model and reward come from it,
// otherwise transitions, start states and rewards are estimated from data.
SspProblem offline_rl_problem(const Dataset& data, int n_states, int n_actions,
                              const OffRlConfig& config,
                              const TabularMdp* mdp = nullptr);

SspSolution solve_offline_rl(const Dataset& data, int n_states, int n_actions,
                             const OffRlConfig& config,
                             const TabularMdp* mdp = nullptr);

// pi proportional to rho_o * y.
TabularPolicy extract_offline_rl_policy(const Table& rho_o, const Table& y);

SoftmaxPolicy extract_offline_rl_policy(const Dataset& data, const Table& y,
                                        SoftmaxPolicy init,
                                        const ExtractionConfig& config);

}  // namespace o2il

#endif  // O2IL_OFFRL_H_
