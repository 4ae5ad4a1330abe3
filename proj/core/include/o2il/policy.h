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

#ifndef O2IL_POLICY_H_
#define O2IL_POLICY_H_

#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "o2il/data.h"
#include "o2il/mdp.h"
#include "o2il/nn.h"
#include "o2il/reward.h"
#include "o2il/tables.h"

namespace o2il {

enum class ExtractionMethod { kClosedForm, kWeightedBc, kReverseKl, kPlainBc };

struct ExtractionConfig {
  ExtractionMethod method = ExtractionMethod::kClosedForm;
  int steps = 1000;
  double lr = 1e-4;
  std::uint64_t seed = 0;
  // Ablation: divide weights by their per-state total before fitting.
  bool normalize_per_state = false;
};

// Tabular policy with free logits, pi(.|s) = softmax(logits(s, .)).
class SoftmaxPolicy {
 public:
  SoftmaxPolicy(int n_states, int n_actions);
  // Logits log(max(p, floor)).
  static SoftmaxPolicy from_policy(const TabularPolicy& policy, double floor = 1e-8);

  int n_states() const { return static_cast<int>(logits_.rows()); }
  int n_actions() const { return static_cast<int>(logits_.cols()); }
  Table& logits() { return logits_; }
  const Table& logits() const { return logits_; }

  Eigen::VectorXd probs(int s) const;
  double log_prob(int s, int a) const;
  TabularPolicy policy() const;
  int sample(int s, std::mt19937_64& rng) const;

 private:
  Table logits_;
};

// Squashed Gaussian over (-1, 1)^k. The network maps state features to
// 2k outputs: the pre-tanh mean followed by the log standard deviation.
class GaussianPolicy {
 public:
  GaussianPolicy(int state_dim, int action_dim, const std::vector<int>& hidden,
                 std::uint64_t seed);

  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }

  struct Head {
    Eigen::VectorXd mean;
    Eigen::VectorXd log_std;
    Eigen::VectorXd raw_log_std;
  };
  Head head(const Eigen::VectorXd& state) const;

  // log pi(a|s); when grad is set it receives d/d params.
  double log_prob(const Eigen::VectorXd& state, const Eigen::VectorXd& action,
                  Eigen::VectorXd* grad = nullptr) const;
  Eigen::VectorXd sample(const Eigen::VectorXd& state, std::mt19937_64& rng) const;

  nlohmann::json to_json() const;
  static GaussianPolicy from_json(const nlohmann::json& j);

 private:
  GaussianPolicy() = default;

  int state_dim_ = 0;
  int action_dim_ = 0;
  Mlp net_;
};

// pi(a|s) = rho_o(s, a) y(s, a) / z(s); rows with z(s) = 0 are uniform.
TabularPolicy extract_policy_closed_form(const Table& rho_o, const Table& y);

// Per-pair sums of y(s, a) over the dataset transitions divided by the
// dataset size.
Table bc_weights(const Dataset& data, const Table& y);

// Maximizer of E_D[y log pi] over tabular policies.
TabularPolicy extract_policy_weighted_bc(const Dataset& data, const Table& y);

// Weighted log-likelihood sum_{s,a} w(s, a) log pi(a|s) and its gradient
// with respect to the logits.
std::pair<double, Table> weighted_log_likelihood(const SoftmaxPolicy& policy,
                                                 const Table& weights);

SoftmaxPolicy extract_policy_weighted_bc(const Dataset& data, const Table& y,
                                         SoftmaxPolicy init,
                                         const ExtractionConfig& config,
                                         std::vector<double>* trace = nullptr);

// q = rho_e * y * (1 / d - 1) with the unclipped discriminator value.
Table reverse_kl_target(const Table& rho_e, const Table& y,
                        const DensityDiscriminator& d);

// Exact minimizer q(s, .) / z(s). Rows of `visited` states with an all-zero
// q are an error; other zero rows become uniform.
TabularPolicy extract_policy_reverse_kl(const Table& q,
                                        const std::vector<bool>& visited);

// sum_s w(s) KL(pi(.|s) || q(s, .)) without the normalizer of q, and its
// logit gradient. Requires q > 0 wherever w(s) > 0.
std::pair<double, Table> reverse_kl_loss(const SoftmaxPolicy& policy,
                                         const Table& q,
                                         const Eigen::VectorXd& state_weights);

SoftmaxPolicy extract_policy_reverse_kl(const Table& q,
                                        const Eigen::VectorXd& state_weights,
                                        SoftmaxPolicy init,
                                        const ExtractionConfig& config);

// log q(s, a) for continuous actions, with d/da written to grad_action.
using LogTarget = std::function<double(const Eigen::VectorXd& state,
                                       const Eigen::VectorXd& action,
                                       Eigen::VectorXd* grad_action)>;

// Reparameterized estimate of mean_i [log pi(a_i|s_i) - log q(s_i, a_i)]
// with a_i = tanh(mean + std * noise_i), and its parameter gradient.
std::pair<double, Eigen::VectorXd> reverse_kl_gaussian_loss(
    const GaussianPolicy& policy, const std::vector<Eigen::VectorXd>& states,
    const std::vector<Eigen::VectorXd>& noise, const LogTarget& log_q);

// mean_i w_i log pi(a_i|s_i) over vector-valued data and its gradient.
std::pair<double, Eigen::VectorXd> gaussian_log_likelihood(
    const GaussianPolicy& policy, const std::vector<Eigen::VectorXd>& states,
    const std::vector<Eigen::VectorXd>& actions, const std::vector<double>& weights);

// Expert-only maximum likelihood.
TabularPolicy plain_bc(const Dataset& data, int n_states, int n_actions);
SoftmaxPolicy plain_bc(const Dataset& data, SoftmaxPolicy init,
                       const ExtractionConfig& config);

// KL(rho^pi || target); +infinity when rho^pi leaves the target support.
double occupancy_divergence(const TabularMdp& mdp, const TabularPolicy& policy,
                            const Table& target);

}  // namespace o2il

#endif  // O2IL_POLICY_H_
