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

#ifndef O2IL_REWARD_H_
#define O2IL_REWARD_H_

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "o2il/data.h"
#include "o2il/nn.h"
#include "o2il/tables.h"

namespace o2il {

// Encodes states and actions as network inputs. Integer points become one-hot
// vectors of the configured cardinality, vector points pass through.
class FeatureMap {
 public:
  static FeatureMap tabular(int n_states, int n_actions);
  static FeatureMap continuous(int state_dim, int action_dim);

  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  int input_dim() const { return state_dim_ + action_dim_; }

  Eigen::VectorXd state(const Point& s) const;
  Eigen::VectorXd action(const Point& a) const;
  Eigen::VectorXd state_action(const Point& s, const Point& a) const;

  nlohmann::json to_json() const;
  static FeatureMap from_json(const nlohmann::json& j);

 private:
  FeatureMap(bool one_hot_states, int state_dim, bool one_hot_actions,
             int action_dim);
  void encode(const Point& p, bool one_hot, int dim, double* out) const;

  bool one_hot_states_ = true;
  int state_dim_ = 0;
  bool one_hot_actions_ = true;
  int action_dim_ = 0;
};

struct ClipBounds {
  double lo = 0.1;
  double hi = 0.9;

  double apply(double d) const { return d < lo ? lo : (d > hi ? hi : d); }
};

// The density-ratio discriminator d(s, a) separating expert pairs from union
// pairs. Evaluations are clipped to the clip bounds; pairs with no mass in
// either distribution evaluate to the lower bound.
class DensityDiscriminator {
 public:
  static DensityDiscriminator tabular(Table raw, Mask defined, ClipBounds clip);
  static DensityDiscriminator neural(Mlp net, FeatureMap features,
                                     ClipBounds clip);

  bool is_tabular() const { return !net_.has_value(); }
  const ClipBounds& clip() const { return clip_; }
  // Same values under different clip bounds.
  DensityDiscriminator with_clip(ClipBounds clip) const;

  // Unclipped value; undefined tabular pairs return the lower clip bound.
  double raw(int s, int a) const;
  double operator()(int s, int a) const { return clip_.apply(raw(s, a)); }
  double operator()(const Point& s, const Point& a) const;

  // Clipped values for every pair of a tabular space.
  Table table(int n_states, int n_actions) const;
  const Mask& defined() const { return defined_; }

  const Mlp& net() const;
  const FeatureMap& features() const;

  nlohmann::json to_json() const;
  static DensityDiscriminator from_json(const nlohmann::json& j);

 private:
  Table raw_;
  Mask defined_;
  std::optional<Mlp> net_;
  std::optional<FeatureMap> features_;
  ClipBounds clip_;
};

// d*(s, a) = rho_e / (rho_e + rho_o) wherever the denominator is positive.
DensityDiscriminator fit_discriminator_closed_form(
    const EmpiricalDistribution& rho_e, const EmpiricalDistribution& rho_o,
    ClipBounds clip = {});

struct LogisticFitConfig {
  int steps = 5000;
  double lr = 1e-5;
  int batch = 256;
  std::vector<int> hidden = {256, 256};
  std::uint64_t seed = 0;
  // Use every sample in each step instead of mini-batches.
  bool full_batch = false;
  // Plain gradient descent instead of Adam.
  bool sgd = false;
  ClipBounds clip;
};

struct LogisticFit {
  DensityDiscriminator discriminator;
  std::vector<double> loss_trace;
};

// Negative logistic log-likelihood
//   -[mean_e log sigmoid(f(x)) + mean_o log(1 - sigmoid(f(x)))]
// and its parameter gradient. Columns of the inputs are samples.
std::pair<double, Eigen::VectorXd> logistic_loss_and_gradient(
    const Mlp& net, const Eigen::MatrixXd& expert_inputs,
    const Eigen::MatrixXd& union_inputs);

// Trains d on expert vs. union samples by stochastic gradient steps. Raises
// NumericalError naming the step if the loss stops being finite.
LogisticFit fit_discriminator_logistic(const Dataset& expert,
                                       const Dataset& union_data,
                                       const FeatureMap& features,
                                       const LogisticFitConfig& config);

// R_alpha(s, a) = alpha * log(d / (1 - d)) + beta, tabulated.
struct AuxiliaryReward {
  Table values;
  double alpha = 1.0;
  double beta = 0.0;
};

double auxiliary_reward_value(double d, double alpha, double beta);

AuxiliaryReward auxiliary_reward(const DensityDiscriminator& d, int n_states,
                                 int n_actions, double alpha = 1.0,
                                 double beta = 0.0);

}  // namespace o2il

#endif  // O2IL_REWARD_H_
