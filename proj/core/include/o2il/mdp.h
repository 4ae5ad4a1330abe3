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

#ifndef O2IL_MDP_H_
#define O2IL_MDP_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "o2il/tables.h"

namespace o2il {

// Finite MDP with dense dynamics. The transition matrix has one row per
// (state, action) pair, row index s * n_actions + a, and one column per next
// state. A discount of exactly 1 selects the undiscounted (long-run average)
// formulation.
class TabularMdp {
 public:
  TabularMdp(int n_states, int n_actions, Eigen::MatrixXd transition,
             Eigen::VectorXd initial, double discount,
             std::optional<Table> reward = std::nullopt);

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  int pair_index(int s, int a) const { return s * n_actions_ + a; }

  const Eigen::MatrixXd& transition() const { return transition_; }
  double transition(int s, int a, int next) const {
    return transition_(pair_index(s, a), next);
  }
  const Eigen::VectorXd& initial() const { return initial_; }
  double discount() const { return discount_; }
  bool undiscounted() const { return discount_ == 1.0; }

  bool has_reward() const { return reward_.has_value(); }
  // Throws ValidationError when the MDP carries no reward table.
  const Table& reward() const;

  TabularMdp with_reward(Table reward) const;
  TabularMdp with_discount(double discount) const;
  TabularMdp with_initial(Eigen::VectorXd initial) const;

 private:
  int n_states_;
  int n_actions_;
  Eigen::MatrixXd transition_;
  Eigen::VectorXd initial_;
  double discount_;
  std::optional<Table> reward_;
};

// Row-stochastic pi[a|s].
class TabularPolicy {
 public:
  explicit TabularPolicy(Table probs);

  static TabularPolicy uniform(int n_states, int n_actions);
  static TabularPolicy deterministic(const std::vector<int>& actions,
                                     int n_actions);

  const Table& probs() const { return probs_; }
  double operator()(int s, int a) const { return probs_(s, a); }
  int n_states() const { return static_cast<int>(probs_.rows()); }
  int n_actions() const { return static_cast<int>(probs_.cols()); }

 private:
  Table probs_;
};

// Normalized state-action occupancy rho[s, a].
class OccupancyMeasure {
 public:
  explicit OccupancyMeasure(Table rho);

  const Table& rho() const { return rho_; }
  double operator()(int s, int a) const { return rho_(s, a); }
  Eigen::VectorXd state_marginal() const { return rho_.rowwise().sum(); }

 private:
  Table rho_;
};

struct Cell {
  int x = 0;
  int y = 0;
};

enum GridAction : int { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3 };

struct GridworldSpec {
  int width = 8;
  int height = 8;
  Cell goal{7, 7};
  double slip = 0.1;
  double step_penalty = -0.01;
  double discount = 0.99;
};

int gridworld_state(const GridworldSpec& spec, Cell cell);

// Four-action grid. The intended move succeeds with probability 1 - slip;
// otherwise one of the three other directions is taken uniformly. Moves off
// the grid leave the agent in place. The goal is absorbing with reward 1,
// every other pair pays step_penalty, and the initial distribution is
// uniform over non-goal cells (the goal itself for a 1x1 grid).
TabularMdp build_gridworld(const GridworldSpec& spec);

struct RandomMdpSpec {
  int n_states = 3;
  int n_actions = 2;
  double discount = 0.9;
  std::uint64_t seed = 0;
  // Smallest transition probability before renormalization; keeps every
  // state reachable so occupancies have full support.
  double min_transition = 0.05;
};

TabularMdp random_mdp(const RandomMdpSpec& spec);

// Greedy policy of the converged optimal Q. Ties (within 1e-9) go to the
// lowest action index. Requires a reward table and discount < 1.
TabularPolicy value_iteration(const TabularMdp& mdp, double tol);

// State-to-state kernel P_pi[s, s'] under the policy.
Eigen::MatrixXd policy_transition(const TabularMdp& mdp,
                                  const TabularPolicy& policy);

// Discounted normalized occupancy via a dense linear solve over the state
// marginal. Requires discount < 1.
OccupancyMeasure stationary_distribution(const TabularMdp& mdp,
                                         const TabularPolicy& policy);

// Long-run average occupancy of the chain (discount == 1). The chain must be
// unichain; otherwise the stationary system is singular.
OccupancyMeasure undiscounted_stationary_distribution(
    const TabularMdp& mdp, const TabularPolicy& policy);

// Dispatches on mdp.undiscounted().
OccupancyMeasure occupancy(const TabularMdp& mdp, const TabularPolicy& policy);

// f_s(rho) = (1 - g) mu(s) + g sum_{s', a} T(s | s', a) rho(s', a)
//            - sum_a rho(s, a).
Eigen::VectorXd bellman_flow_residual(const TabularMdp& mdp, const Table& rho);

// E_{(s,a) ~ rho^pi}[R(s, a)].
double policy_return(const TabularMdp& mdp, const TabularPolicy& policy);

// Unnormalized discounted values V = (I - g P_pi)^{-1} r_pi of an arbitrary
// per-pair reward.
Eigen::VectorXd policy_values(const TabularMdp& mdp,
                              const TabularPolicy& policy,
                              const Table& reward);

nlohmann::json mdp_to_json(const TabularMdp& mdp);
TabularMdp mdp_from_json(const nlohmann::json& j);
void save_mdp(const std::string& path, const TabularMdp& mdp);
TabularMdp load_mdp(const std::string& path);

nlohmann::json policy_to_json(const TabularPolicy& policy);
TabularPolicy policy_from_json(const nlohmann::json& j);

}  // namespace o2il

#endif  // O2IL_MDP_H_
