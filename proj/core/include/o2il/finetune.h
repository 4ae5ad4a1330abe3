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

#ifndef O2IL_FINETUNE_H_
#define O2IL_FINETUNE_H_

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "o2il/data.h"
#include "o2il/mdp.h"
#include "o2il/nn.h"
#include "o2il/policy.h"
#include "o2il/reward.h"
#include "o2il/stitch.h"
#include "o2il/tables.h"

namespace o2il {

enum class DiscInit { kStitched, kRandom, kTable };
enum class PolicyReward {
  // r = -log D
  kNegLogD,
  // r = log(1 - D)
  kLogOneMinusD,
};

DiscInit parse_disc_init(const std::string& name);
std::string to_string(DiscInit init);

struct GailConfig {
  // Environment episodes consumed by the whole run.
  int episodes = 200;
  int horizon = 50;
  // Rollout batch per iteration; the mean baseline needs at least two.
  int episodes_per_iter = 4;
  int disc_steps_per_iter = 1;
  int policy_steps_per_iter = 1;
  double lr_disc = 1e-5;
  double lr_policy = 1e-4;
  std::uint64_t seed = 0;
  DiscInit disc_init = DiscInit::kStitched;
  PolicyReward reward = PolicyReward::kNegLogD;
  // Standard deviation of the random discriminator initialization.
  double init_std = 0.5;
  // Expert pairs drawn per discriminator step; 0 uses all of them.
  int expert_batch = 0;

  void validate() const;
};

struct CurvePoint {
  long episodes = 0;
  std::string metric;
  double value = 0.0;
};

struct LearningCurve {
  std::vector<CurvePoint> points;

  void add(long episodes, const std::string& metric, double value);
  // (episodes, value) pairs of one metric in insertion order.
  std::vector<std::pair<long, double>> series(const std::string& metric) const;
  // First episode count at which the metric reaches `level`.
  std::optional<long> first_reaching(const std::string& metric, double level) const;

  void write_csv(const std::string& path) const;
  static LearningCurve read_csv(const std::string& path);
  void write_svg(const std::string& path, const std::string& metric) const;
};

// Tabular D(s, a) = sigmoid(log alpha + log_y(s, a) - logit(clip(sigmoid(d_logit(s, a))))),
// the stitched form with both parameter tables trainable.
class GailDiscriminator {
 public:
  GailDiscriminator(Table d_logit, Table log_y, double alpha, ClipBounds clip);

  static GailDiscriminator stitched(const StitchedDiscriminator& d0, int n_states,
                                    int n_actions);
  static GailDiscriminator random(int n_states, int n_actions, double alpha,
                                  ClipBounds clip, double std, std::uint64_t seed);
  // d_logit = 0 and log_y = logit(D) - log alpha reproduce the given table.
  static GailDiscriminator from_table(const Table& d, double alpha, ClipBounds clip);

  int n_states() const { return static_cast<int>(d_logit_.rows()); }
  int n_actions() const { return static_cast<int>(d_logit_.cols()); }
  double alpha() const { return alpha_; }
  const ClipBounds& clip() const { return clip_; }

  double logit(int s, int a) const;
  double operator()(int s, int a) const;
  Table table() const;

  // Flat [d_logit; log_y], column-major tables.
  Eigen::VectorXd params() const;
  void set_params(const Eigen::VectorXd& params);
  Eigen::Index num_params() const { return 2 * d_logit_.size(); }

  nlohmann::json to_json() const;
  static GailDiscriminator from_json(const nlohmann::json& j);

 private:
  Table d_logit_;
  Table log_y_;
  double alpha_ = 1.0;
  ClipBounds clip_;
};

using Pair = std::array<int, 2>;

struct Episode {
  std::vector<int> states;
  std::vector<int> actions;
};

std::vector<Episode> rollout(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                             int n_episodes, int horizon, std::mt19937_64& rng);
std::vector<Pair> episode_pairs(const std::vector<Episode>& episodes);
std::vector<Pair> expert_pairs(const Dataset& data);

// E_pi[log D] + E_expert[log(1 - D)] and its gradient in params().
std::pair<double, Eigen::VectorXd> gail_discriminator_gradient(
    const GailDiscriminator& d, const std::vector<Pair>& policy_pairs,
    const std::vector<Pair>& expert_pairs);

// One Adam ascent step on the objective above; returns the loss (its
// negative) before the step.
double gail_discriminator_step(GailDiscriminator& d,
                               const std::vector<Pair>& policy_pairs,
                               const std::vector<Pair>& expert_pairs, Adam& optimizer);

// Discounted reward-to-go minus the across-episode mean at each timestep.
std::vector<Eigen::VectorXd> policy_advantages(const std::vector<Episode>& episodes,
                                               const GailDiscriminator& d,
                                               double discount, PolicyReward reward);

// (1 / n) sum_episodes sum_t A_t log pi(a_t|s_t) with fixed advantages,
// and its logit gradient.
std::pair<double, Table> gail_policy_surrogate(
    const SoftmaxPolicy& policy, const std::vector<Episode>& episodes,
    const std::vector<Eigen::VectorXd>& advantages);

// One Adam ascent step of the score-function estimator.
void gail_policy_step(SoftmaxPolicy& policy, const std::vector<Episode>& episodes,
                      const GailDiscriminator& d, double discount,
                      PolicyReward reward, Adam& optimizer);

struct GailResult {
  SoftmaxPolicy policy;
  GailDiscriminator discriminator;
  LearningCurve curve;
};

// Alternating discriminator and policy updates until cfg.episodes have been
// consumed. The curve logs exact "return" and "kl" (KL(rho^pi || rho_e))
// before training and after every iteration.
GailResult run_gail(const TabularMdp& mdp, SoftmaxPolicy policy,
                    GailDiscriminator discriminator, const Dataset& expert,
                    const GailConfig& config);

// Min over the first `evaluations` post-update returns, divided by the
// pretrained return.
double retention(const LearningCurve& curve, double pretrained_return,
                 int evaluations = 5);

struct UnlearningSeed {
  std::uint64_t seed = 0;
  double retention_stitched = 0.0;
  double retention_random = 0.0;
  LearningCurve stitched;
  LearningCurve random;
};

struct UnlearningReport {
  double pretrained_return = 0.0;
  std::vector<UnlearningSeed> seeds;

  int stitched_wins() const;
  double min_stitched_retention() const;
  nlohmann::json to_json() const;
};

// For each seed runs GAIL from the same pretrained policy twice, with the
// stitched and with a random discriminator.
UnlearningReport unlearning_experiment(const TabularMdp& mdp,
                                       const TabularPolicy& pretrained,
                                       const StitchedDiscriminator& d0,
                                       const Dataset& expert,
                                       const std::vector<std::uint64_t>& seeds,
                                       GailConfig config);

}  // namespace o2il

#endif  // O2IL_FINETUNE_H_
