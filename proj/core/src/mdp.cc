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

#include "o2il/mdp.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>

#include <fmt/format.h>

#include "o2il/error.h"

namespace o2il {
namespace {

constexpr double kStochasticTol = 1e-12;

void check_distribution(const Eigen::VectorXd& p, const std::string& what) {
  if ((p.array() < 0.0).any() || !p.allFinite()) {
    throw ValidationError(fmt::format("{}: negative or non-finite entry", what));
  }
  if (std::abs(p.sum() - 1.0) > kStochasticTol) {
    throw ValidationError(
        fmt::format("{}: sums to {:.17g}, expected 1", what, p.sum()));
  }
}

}  // namespace

TabularMdp::TabularMdp(int n_states, int n_actions,
                       Eigen::MatrixXd transition, Eigen::VectorXd initial,
                       double discount, std::optional<Table> reward)
    : n_states_(n_states),
      n_actions_(n_actions),
      transition_(std::move(transition)),
      initial_(std::move(initial)),
      discount_(discount),
      reward_(std::move(reward)) {
  if (n_states_ < 1 || n_actions_ < 1) {
    throw ValidationError("TabularMdp: need at least one state and action");
  }
  if (transition_.rows() != n_states_ * n_actions_ ||
      transition_.cols() != n_states_) {
    throw ValidationError(fmt::format(
        "TabularMdp: transition is {}x{}, expected {}x{}", transition_.rows(),
        transition_.cols(), n_states_ * n_actions_, n_states_));
  }
  if (initial_.size() != n_states_) {
    throw ValidationError("TabularMdp: initial distribution has wrong size");
  }
  if (!(discount_ > 0.0 && discount_ <= 1.0)) {
    throw ValidationError(
        fmt::format("TabularMdp: discount {} outside (0, 1]", discount_));
  }
  for (int s = 0; s < n_states_; ++s) {
    for (int a = 0; a < n_actions_; ++a) {
      check_distribution(transition_.row(pair_index(s, a)).transpose(),
                         fmt::format("T[.|{},{}]", s, a));
    }
  }
  check_distribution(initial_, "initial distribution");
  if (reward_) {
    if (reward_->rows() != n_states_ || reward_->cols() != n_actions_) {
      throw ValidationError("TabularMdp: reward table has wrong shape");
    }
    if (!reward_->allFinite()) {
      throw ValidationError("TabularMdp: reward table is not finite");
    }
  }
}

const Table& TabularMdp::reward() const {
  if (!reward_) throw ValidationError("MDP has no reward table");
  return *reward_;
}

TabularMdp TabularMdp::with_reward(Table reward) const {
  return TabularMdp(n_states_, n_actions_, transition_, initial_, discount_,
                    std::move(reward));
}

TabularMdp TabularMdp::with_discount(double discount) const {
  return TabularMdp(n_states_, n_actions_, transition_, initial_, discount,
                    reward_);
}

TabularMdp TabularMdp::with_initial(Eigen::VectorXd initial) const {
  return TabularMdp(n_states_, n_actions_, transition_, std::move(initial),
                    discount_, reward_);
}

TabularPolicy::TabularPolicy(Table probs) : probs_(std::move(probs)) {
  if (probs_.rows() < 1 || probs_.cols() < 1) {
    throw ValidationError("TabularPolicy: empty table");
  }
  for (Eigen::Index s = 0; s < probs_.rows(); ++s) {
    check_distribution(probs_.row(s).transpose(),
                       fmt::format("pi[.|{}]", s));
  }
}

TabularPolicy TabularPolicy::uniform(int n_states, int n_actions) {
  return TabularPolicy(
      Table::Constant(n_states, n_actions, 1.0 / static_cast<double>(n_actions)));
}

TabularPolicy TabularPolicy::deterministic(const std::vector<int>& actions,
                                           int n_actions) {
  Table probs = Table::Zero(static_cast<Eigen::Index>(actions.size()), n_actions);
  for (std::size_t s = 0; s < actions.size(); ++s) {
    if (actions[s] < 0 || actions[s] >= n_actions) {
      throw ValidationError("deterministic policy: action out of range");
    }
    probs(static_cast<Eigen::Index>(s), actions[s]) = 1.0;
  }
  return TabularPolicy(std::move(probs));
}

OccupancyMeasure::OccupancyMeasure(Table rho) : rho_(std::move(rho)) {
  if ((rho_.array() < 0.0).any() || !rho_.allFinite()) {
    throw ValidationError("OccupancyMeasure: negative or non-finite entry");
  }
  if (std::abs(rho_.sum() - 1.0) > 1e-9) {
    throw ValidationError(
        fmt::format("OccupancyMeasure: mass {:.17g}, expected 1", rho_.sum()));
  }
}

int gridworld_state(const GridworldSpec& spec, Cell cell) {
  return cell.y * spec.width + cell.x;
}

TabularMdp build_gridworld(const GridworldSpec& spec) {
  if (spec.width < 1 || spec.height < 1) {
    throw ValidationError("gridworld: width and height must be >= 1");
  }
  if (spec.goal.x < 0 || spec.goal.x >= spec.width || spec.goal.y < 0 ||
      spec.goal.y >= spec.height) {
    throw ValidationError("gridworld: goal outside the grid");
  }
  if (!(spec.slip >= 0.0 && spec.slip < 1.0)) {
    throw ValidationError("gridworld: slip must lie in [0, 1)");
  }
  const int n_states = spec.width * spec.height;
  constexpr int kActions = 4;
  constexpr int kDx[kActions] = {0, 1, 0, -1};
  constexpr int kDy[kActions] = {1, 0, -1, 0};
  const int goal = gridworld_state(spec, spec.goal);

  auto move = [&](int x, int y, int dir) {
    const int nx = x + kDx[dir];
    const int ny = y + kDy[dir];
    if (nx < 0 || nx >= spec.width || ny < 0 || ny >= spec.height) {
      return gridworld_state(spec, {x, y});
    }
    return gridworld_state(spec, {nx, ny});
  };

  Eigen::MatrixXd transition = Eigen::MatrixXd::Zero(n_states * kActions, n_states);
  Table reward = Table::Constant(n_states, kActions, spec.step_penalty);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const int s = gridworld_state(spec, {x, y});
      for (int a = 0; a < kActions; ++a) {
        const int row = s * kActions + a;
        if (s == goal) {
          transition(row, s) = 1.0;
          reward(s, a) = 1.0;
          continue;
        }
        for (int dir = 0; dir < kActions; ++dir) {
          const double p =
              dir == a ? 1.0 - spec.slip : spec.slip / (kActions - 1);
          transition(row, move(x, y, dir)) += p;
        }
      }
    }
  }

  Eigen::VectorXd initial = Eigen::VectorXd::Zero(n_states);
  if (n_states == 1) {
    initial(0) = 1.0;
  } else {
    initial.setConstant(1.0 / static_cast<double>(n_states - 1));
    initial(goal) = 0.0;
  }
  return TabularMdp(n_states, kActions, std::move(transition),
                    std::move(initial), spec.discount, std::move(reward));
}

TabularMdp random_mdp(const RandomMdpSpec& spec) {
  if (spec.n_states < 1 || spec.n_actions < 1) {
    throw ValidationError("random_mdp: need at least one state and action");
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int rows = spec.n_states * spec.n_actions;
  Eigen::MatrixXd transition(rows, spec.n_states);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < spec.n_states; ++c) {
      transition(r, c) = spec.min_transition + unit(rng);
    }
    transition.row(r) /= transition.row(r).sum();
  }
  Eigen::VectorXd initial(spec.n_states);
  for (int s = 0; s < spec.n_states; ++s) initial(s) = 0.1 + unit(rng);
  initial /= initial.sum();
  return TabularMdp(spec.n_states, spec.n_actions, std::move(transition),
                    std::move(initial), spec.discount);
}

TabularPolicy value_iteration(const TabularMdp& mdp, double tol) {
  if (!(tol > 0.0)) throw ValidationError("value_iteration: tol must be > 0");
  if (mdp.undiscounted()) {
    throw ValidationError("value_iteration: requires discount < 1");
  }
  const Table& reward = mdp.reward();
  const int n_states = mdp.n_states();
  const int n_actions = mdp.n_actions();
  const double gamma = mdp.discount();

  // Synchronous sweeps, so the result does not depend on state order.
  Eigen::VectorXd values = Eigen::VectorXd::Zero(n_states);
  Table q(n_states, n_actions);
  auto backup = [&]() {
    const Eigen::VectorXd expected = mdp.transition() * values;
    for (int s = 0; s < n_states; ++s) {
      for (int a = 0; a < n_actions; ++a) {
        q(s, a) = reward(s, a) + gamma * expected(mdp.pair_index(s, a));
      }
    }
  };
  const double threshold = tol * (1.0 - gamma) / (2.0 * gamma);
  for (int it = 0; it < 1000000; ++it) {
    backup();
    const Eigen::VectorXd next = q.rowwise().maxCoeff();
    const double change = (next - values).cwiseAbs().maxCoeff();
    values = next;
    if (change < threshold) break;
  }
  backup();

  std::vector<int> greedy(static_cast<std::size_t>(n_states), 0);
  for (int s = 0; s < n_states; ++s) {
    const double best = q.row(s).maxCoeff();
    const double tie = 1e-9 * std::max(1.0, std::abs(best));
    for (int a = 0; a < n_actions; ++a) {
      if (q(s, a) >= best - tie) {
        greedy[static_cast<std::size_t>(s)] = a;
        break;
      }
    }
  }
  return TabularPolicy::deterministic(greedy, n_actions);
}

Eigen::MatrixXd policy_transition(const TabularMdp& mdp,
                                  const TabularPolicy& policy) {
  if (policy.n_states() != mdp.n_states() ||
      policy.n_actions() != mdp.n_actions()) {
    throw ValidationError("policy shape does not match the MDP");
  }
  Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(mdp.n_states(), mdp.n_states());
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      const double p = policy(s, a);
      if (p == 0.0) continue;
      kernel.row(s) += p * mdp.transition().row(mdp.pair_index(s, a));
    }
  }
  return kernel;
}

namespace {

Table pair_table(const Eigen::VectorXd& state_marginal,
                 const TabularPolicy& policy) {
  Table rho(policy.n_states(), policy.n_actions());
  for (int s = 0; s < policy.n_states(); ++s) {
    rho.row(s) = state_marginal(s) * policy.probs().row(s);
  }
  return rho;
}

}  // namespace

OccupancyMeasure stationary_distribution(const TabularMdp& mdp,
                                         const TabularPolicy& policy) {
  if (mdp.undiscounted()) {
    throw ValidationError("stationary_distribution: requires discount < 1");
  }
  const Eigen::MatrixXd kernel = policy_transition(mdp, policy);
  const int n = mdp.n_states();
  const Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(n, n) - mdp.discount() * kernel.transpose();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  const Eigen::VectorXd marginal = lu.solve((1.0 - mdp.discount()) * mdp.initial());
  if (!marginal.allFinite()) {
    throw NumericalError("stationary_distribution: singular flow system");
  }
  return OccupancyMeasure(pair_table(marginal.cwiseMax(0.0), policy));
}

OccupancyMeasure undiscounted_stationary_distribution(
    const TabularMdp& mdp, const TabularPolicy& policy) {
  const Eigen::MatrixXd kernel = policy_transition(mdp, policy);
  const int n = mdp.n_states();
  // [P^T - I; 1^T] d = [0; 1]
  Eigen::MatrixXd system(n + 1, n);
  system.topRows(n) = kernel.transpose() - Eigen::MatrixXd::Identity(n, n);
  system.row(n).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
  rhs(n) = 1.0;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(system);
  if (qr.rank() < n) {
    throw NumericalError(
        "undiscounted_stationary_distribution: chain is not unichain");
  }
  const Eigen::VectorXd marginal = qr.solve(rhs);
  if (!marginal.allFinite() || (system * marginal - rhs).norm() > 1e-8) {
    throw NumericalError("undiscounted_stationary_distribution: no solution");
  }
  Eigen::VectorXd clean = marginal.cwiseMax(0.0);
  clean /= clean.sum();
  return OccupancyMeasure(pair_table(clean, policy));
}

OccupancyMeasure occupancy(const TabularMdp& mdp, const TabularPolicy& policy) {
  return mdp.undiscounted() ? undiscounted_stationary_distribution(mdp, policy)
                            : stationary_distribution(mdp, policy);
}

Eigen::VectorXd bellman_flow_residual(const TabularMdp& mdp, const Table& rho) {
  if (rho.rows() != mdp.n_states() || rho.cols() != mdp.n_actions()) {
    throw ValidationError("bellman_flow_residual: occupancy shape mismatch");
  }
  const double gamma = mdp.discount();
  Eigen::VectorXd residual = (1.0 - gamma) * mdp.initial();
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      residual += gamma * rho(s, a) *
                  mdp.transition().row(mdp.pair_index(s, a)).transpose();
    }
  }
  residual -= rho.rowwise().sum();
  return residual;
}

double policy_return(const TabularMdp& mdp, const TabularPolicy& policy) {
  const Table& reward = mdp.reward();
  return occupancy(mdp, policy).rho().cwiseProduct(reward).sum();
}

Eigen::VectorXd policy_values(const TabularMdp& mdp,
                              const TabularPolicy& policy,
                              const Table& reward) {
  if (mdp.undiscounted()) {
    throw ValidationError("policy_values: requires discount < 1");
  }
  const Eigen::MatrixXd kernel = policy_transition(mdp, policy);
  const Eigen::VectorXd expected_reward =
      policy.probs().cwiseProduct(reward).rowwise().sum();
  const int n = mdp.n_states();
  const Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(n, n) - mdp.discount() * kernel;
  return system.partialPivLu().solve(expected_reward);
}

nlohmann::json mdp_to_json(const TabularMdp& mdp) {
  nlohmann::json transition = nlohmann::json::array();
  for (int s = 0; s < mdp.n_states(); ++s) {
    nlohmann::json per_action = nlohmann::json::array();
    for (int a = 0; a < mdp.n_actions(); ++a) {
      per_action.push_back(
          vector_to_json(mdp.transition().row(mdp.pair_index(s, a)).transpose()));
    }
    transition.push_back(std::move(per_action));
  }
  nlohmann::json j = {
      {"n_states", mdp.n_states()},
      {"n_actions", mdp.n_actions()},
      {"transition", std::move(transition)},
      {"initial", vector_to_json(mdp.initial())},
      {"discount", mdp.discount()},
  };
  j["reward"] = mdp.has_reward() ? matrix_to_json(mdp.reward()) : nlohmann::json();
  return j;
}

TabularMdp mdp_from_json(const nlohmann::json& j) {
  try {
    const int n_states = j.at("n_states").get<int>();
    const int n_actions = j.at("n_actions").get<int>();
    const auto& transition_json = j.at("transition");
    if (!transition_json.is_array() ||
        static_cast<int>(transition_json.size()) != n_states) {
      throw ValidationError("mdp json: transition must have n_states entries");
    }
    Eigen::MatrixXd transition(n_states * n_actions, n_states);
    for (int s = 0; s < n_states; ++s) {
      const auto& per_action = transition_json[static_cast<std::size_t>(s)];
      if (!per_action.is_array() ||
          static_cast<int>(per_action.size()) != n_actions) {
        throw ValidationError(
            fmt::format("mdp json: transition[{}] must have n_actions rows", s));
      }
      for (int a = 0; a < n_actions; ++a) {
        const Eigen::VectorXd row = vector_from_json(
            per_action[static_cast<std::size_t>(a)], "mdp json: transition row");
        if (row.size() != n_states) {
          throw ValidationError("mdp json: transition row has wrong length");
        }
        transition.row(s * n_actions + a) = row.transpose();
      }
    }
    std::optional<Table> reward;
    if (j.contains("reward") && !j.at("reward").is_null()) {
      reward = matrix_from_json(j.at("reward"), "mdp json: reward");
    }
    return TabularMdp(n_states, n_actions, std::move(transition),
                      vector_from_json(j.at("initial"), "mdp json: initial"),
                      j.at("discount").get<double>(), std::move(reward));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("mdp json: {}", e.what()));
  }
}

void save_mdp(const std::string& path, const TabularMdp& mdp) {
  write_json_file(path, mdp_to_json(mdp));
}

TabularMdp load_mdp(const std::string& path) {
  return mdp_from_json(read_json_file(path));
}

nlohmann::json policy_to_json(const TabularPolicy& policy) {
  return {{"kind", "tabular"}, {"probs", matrix_to_json(policy.probs())}};
}

TabularPolicy policy_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("kind", "") != "tabular" || !j.contains("probs")) {
    throw ValidationError("policy json: expected a tabular policy");
  }
  return TabularPolicy(matrix_from_json(j.at("probs"), "policy json: probs"));
}

}  // namespace o2il
