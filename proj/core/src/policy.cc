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

#include "o2il/policy.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "o2il/error.h"

namespace o2il {
namespace {

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

double log_one_minus_tanh_sq(double u) {
  const double au = std::abs(u);
  return 2.0 * (std::numbers::ln2 - au - std::log1p(std::exp(-2.0 * au)));
}

Table pair_counts(const Dataset& data, const Table& y, bool expert_only) {
  Table w = Table::Zero(y.rows(), y.cols());
  double n = 0.0;
  for (const auto& t : data.transitions) {
    if (expert_only && t.source != Source::kExpert) continue;
    const int s = point_index(t.state);
    const int a = point_index(t.action);
    if (s < 0 || s >= y.rows() || a < 0 || a >= y.cols()) {
      throw ValidationError("transition outside the weight table");
    }
    w(s, a) += y(s, a);
    n += 1.0;
  }
  if (n == 0.0) throw ValidationError("no transitions to fit");
  return w / n;
}

void check_weights(const Table& w) {
  if (!w.allFinite() || (w.array() < 0.0).any()) {
    throw ValidationError("weights must be finite and nonnegative");
  }
  if (w.sum() <= 0.0) throw ValidationError("all weights are zero");
}

Table per_state_normalized(const Table& w) {
  Table out = w;
  for (Eigen::Index s = 0; s < w.rows(); ++s) {
    const double z = w.row(s).sum();
    if (z > 0.0) out.row(s) /= z;
  }
  return out;
}

SoftmaxPolicy fit_weighted(const Table& weights, SoftmaxPolicy policy,
                           const ExtractionConfig& config,
                           std::vector<double>* trace) {
  if (config.steps < 1) throw ValidationError("extraction steps must be >= 1");
  if (!(config.lr > 0.0)) throw ValidationError("extraction lr must be positive");
  if (weights.rows() != policy.n_states() || weights.cols() != policy.n_actions()) {
    throw ValidationError("weight table does not match the policy");
  }
  const Table w = config.normalize_per_state ? per_state_normalized(weights) : weights;
  Adam adam(w.size(), {.lr = config.lr});
  for (int step = 0; step < config.steps; ++step) {
    auto [value, grad] = weighted_log_likelihood(policy, w);
    if (trace != nullptr) trace->push_back(value);
    adam.ascend(flat(policy.logits()), flat(grad));
  }
  return policy;
}

}  // namespace

SoftmaxPolicy::SoftmaxPolicy(int n_states, int n_actions)
    : logits_(Table::Zero(n_states, n_actions)) {
  if (n_states < 1 || n_actions < 1) {
    throw ValidationError("SoftmaxPolicy: dimensions must be positive");
  }
}

SoftmaxPolicy SoftmaxPolicy::from_policy(const TabularPolicy& policy, double floor) {
  SoftmaxPolicy out(policy.n_states(), policy.n_actions());
  out.logits_ = policy.probs().cwiseMax(floor).array().log();
  return out;
}

Eigen::VectorXd SoftmaxPolicy::probs(int s) const {
  return softmax(logits_.row(s).transpose());
}

double SoftmaxPolicy::log_prob(int s, int a) const {
  const double m = logits_.row(s).maxCoeff();
  return logits_(s, a) - m - std::log((logits_.row(s).array() - m).exp().sum());
}

TabularPolicy SoftmaxPolicy::policy() const {
  Table p(logits_.rows(), logits_.cols());
  for (Eigen::Index s = 0; s < p.rows(); ++s) {
    p.row(s) = probs(static_cast<int>(s)).transpose();
  }
  return TabularPolicy(std::move(p));
}

int SoftmaxPolicy::sample(int s, std::mt19937_64& rng) const {
  const Eigen::VectorXd p = probs(s);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (Eigen::Index a = 0; a < p.size(); ++a) {
    acc += p(a);
    if (u < acc) return static_cast<int>(a);
  }
  return static_cast<int>(p.size() - 1);
}

GaussianPolicy::GaussianPolicy(int state_dim, int action_dim,
                               const std::vector<int>& hidden, std::uint64_t seed)
    : state_dim_(state_dim), action_dim_(action_dim) {
  if (state_dim < 1 || action_dim < 1) {
    throw ValidationError("GaussianPolicy: dimensions must be positive");
  }
  std::vector<int> widths{state_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(2 * action_dim);
  net_ = Mlp(widths, seed);
}

GaussianPolicy::Head GaussianPolicy::head(const Eigen::VectorXd& state) const {
  const Eigen::VectorXd out = net_.forward(state);
  Head h;
  h.mean = out.head(action_dim_);
  h.raw_log_std = out.tail(action_dim_);
  h.log_std = h.raw_log_std.cwiseMax(tanh_gaussian::kMinLogStd)
                  .cwiseMin(tanh_gaussian::kMaxLogStd);
  return h;
}

double GaussianPolicy::log_prob(const Eigen::VectorXd& state,
                                const Eigen::VectorXd& action,
                                Eigen::VectorXd* grad) const {
  MlpTrace trace;
  const Eigen::VectorXd out = net_.forward(state, trace);
  const Eigen::VectorXd mean = out.head(action_dim_);
  const Eigen::VectorXd raw = out.tail(action_dim_);
  const Eigen::VectorXd log_std =
      raw.cwiseMax(tanh_gaussian::kMinLogStd).cwiseMin(tanh_gaussian::kMaxLogStd);
  const tanh_gaussian::LogProb lp = tanh_gaussian::log_prob(mean, log_std, action);
  if (grad != nullptr) {
    Eigen::MatrixXd g(2 * action_dim_, 1);
    for (int k = 0; k < action_dim_; ++k) {
      g(k, 0) = lp.d_mean(k);
      const bool inside = raw(k) >= tanh_gaussian::kMinLogStd &&
                          raw(k) <= tanh_gaussian::kMaxLogStd;
      g(action_dim_ + k, 0) = inside ? lp.d_log_std(k) : 0.0;
    }
    *grad = net_.backward(trace, g);
  }
  return lp.value;
}

Eigen::VectorXd GaussianPolicy::sample(const Eigen::VectorXd& state,
                                       std::mt19937_64& rng) const {
  const Head h = head(state);
  std::normal_distribution<double> normal;
  Eigen::VectorXd noise(action_dim_);
  for (int k = 0; k < action_dim_; ++k) noise(k) = normal(rng);
  return tanh_gaussian::sample(h.mean, h.log_std, noise).action;
}

nlohmann::json GaussianPolicy::to_json() const {
  return {{"kind", "gaussian"},
          {"state_dim", state_dim_},
          {"action_dim", action_dim_},
          {"net", net_.to_json()}};
}

GaussianPolicy GaussianPolicy::from_json(const nlohmann::json& j) {
  try {
    if (j.at("kind").get<std::string>() != "gaussian") {
      throw ValidationError("policy json: expected a gaussian policy");
    }
    GaussianPolicy p;
    p.state_dim_ = j.at("state_dim").get<int>();
    p.action_dim_ = j.at("action_dim").get<int>();
    p.net_ = Mlp::from_json(j.at("net"));
    if (p.net_.input_size() != p.state_dim_ || p.net_.output_size() != 2 * p.action_dim_) {
      throw ValidationError("policy json: network does not match dimensions");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("policy json: {}", e.what()));
  }
}

TabularPolicy extract_policy_closed_form(const Table& rho_o, const Table& y) {
  if (rho_o.rows() != y.rows() || rho_o.cols() != y.cols()) {
    throw ValidationError("extract_policy_closed_form: shape mismatch");
  }
  if ((y.array() <= 0.0).any()) {
    throw ValidationError("extract_policy_closed_form: y must be positive");
  }
  return TabularPolicy(normalize_rows(rho_o.cwiseProduct(y)));
}

Table bc_weights(const Dataset& data, const Table& y) {
  return pair_counts(data, y, false);
}

TabularPolicy extract_policy_weighted_bc(const Dataset& data, const Table& y) {
  check_weights(y);
  const Table w = bc_weights(data, y);
  check_weights(w);
  return TabularPolicy(normalize_rows(w));
}

std::pair<double, Table> weighted_log_likelihood(const SoftmaxPolicy& policy,
                                                 const Table& weights) {
  double value = 0.0;
  Table grad(weights.rows(), weights.cols());
  for (int s = 0; s < policy.n_states(); ++s) {
    const Eigen::VectorXd p = policy.probs(s);
    const double total = weights.row(s).sum();
    for (int a = 0; a < policy.n_actions(); ++a) {
      if (weights(s, a) != 0.0) value += weights(s, a) * policy.log_prob(s, a);
      grad(s, a) = weights(s, a) - total * p(a);
    }
  }
  return {value, std::move(grad)};
}

SoftmaxPolicy extract_policy_weighted_bc(const Dataset& data, const Table& y,
                                         SoftmaxPolicy init,
                                         const ExtractionConfig& config,
                                         std::vector<double>* trace) {
  check_weights(y);
  const Table w = bc_weights(data, y);
  check_weights(w);
  return fit_weighted(w, std::move(init), config, trace);
}

Table reverse_kl_target(const Table& rho_e, const Table& y,
                        const DensityDiscriminator& d) {
  Table q = Table::Zero(rho_e.rows(), rho_e.cols());
  for (int s = 0; s < q.rows(); ++s) {
    for (int a = 0; a < q.cols(); ++a) {
      const double ds = d.raw(s, a);
      if (rho_e(s, a) > 0.0 && ds > 0.0) {
        q(s, a) = rho_e(s, a) * y(s, a) * (1.0 / ds - 1.0);
      }
    }
  }
  return q;
}

TabularPolicy extract_policy_reverse_kl(const Table& q,
                                        const std::vector<bool>& visited) {
  if (!q.allFinite() || (q.array() < 0.0).any()) {
    throw ValidationError("reverse-KL target must be finite and nonnegative");
  }
  for (Eigen::Index s = 0; s < q.rows(); ++s) {
    if (s < static_cast<Eigen::Index>(visited.size()) && visited[s] &&
        q.row(s).sum() <= 0.0) {
      throw ValidationError(fmt::format("reverse-KL target is zero at visited state {}", s));
    }
  }
  return TabularPolicy(normalize_rows(q));
}

std::pair<double, Table> reverse_kl_loss(const SoftmaxPolicy& policy, const Table& q,
                                         const Eigen::VectorXd& state_weights) {
  double loss = 0.0;
  Table grad = Table::Zero(q.rows(), q.cols());
  for (int s = 0; s < policy.n_states(); ++s) {
    const double w = state_weights(s);
    if (w == 0.0) continue;
    const Eigen::VectorXd p = policy.probs(s);
    Eigen::VectorXd c(p.size());
    for (int a = 0; a < policy.n_actions(); ++a) {
      if (!(q(s, a) > 0.0)) {
        throw ValidationError(fmt::format("reverse-KL target is zero at ({}, {})", s, a));
      }
      c(a) = policy.log_prob(s, a) - std::log(q(s, a));
    }
    const double mean_c = p.dot(c);
    loss += w * mean_c;
    grad.row(s) = (w * p.array() * (c.array() - mean_c)).transpose();
  }
  return {loss, std::move(grad)};
}

SoftmaxPolicy extract_policy_reverse_kl(const Table& q,
                                        const Eigen::VectorXd& state_weights,
                                        SoftmaxPolicy policy,
                                        const ExtractionConfig& config) {
  if (config.steps < 1) throw ValidationError("extraction steps must be >= 1");
  Adam adam(q.size(), {.lr = config.lr});
  for (int step = 0; step < config.steps; ++step) {
    auto [loss, grad] = reverse_kl_loss(policy, q, state_weights);
    adam.descend(flat(policy.logits()), flat(grad));
  }
  return policy;
}

std::pair<double, Eigen::VectorXd> reverse_kl_gaussian_loss(
    const GaussianPolicy& policy, const std::vector<Eigen::VectorXd>& states,
    const std::vector<Eigen::VectorXd>& noise, const LogTarget& log_q) {
  if (states.empty() || states.size() != noise.size()) {
    throw ValidationError("reverse-KL batch: states and noise must match");
  }
  const int k = policy.action_dim();
  const double n = static_cast<double>(states.size());
  double loss = 0.0;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(policy.net().num_params());
  for (std::size_t i = 0; i < states.size(); ++i) {
    MlpTrace trace;
    const Eigen::VectorXd out = policy.net().forward(states[i], trace);
    const Eigen::VectorXd mean = out.head(k);
    const Eigen::VectorXd raw = out.tail(k);
    const Eigen::VectorXd log_std =
        raw.cwiseMax(tanh_gaussian::kMinLogStd).cwiseMin(tanh_gaussian::kMaxLogStd);
    const tanh_gaussian::Sample smp = tanh_gaussian::sample(mean, log_std, noise[i]);
    Eigen::VectorXd g_action = Eigen::VectorXd::Zero(k);
    double value = -log_q(states[i], smp.action, &g_action);
    Eigen::MatrixXd g_out(2 * k, 1);
    for (int j = 0; j < k; ++j) {
      const double u = smp.pre_tanh(j);
      const double eps = noise[i](j);
      const double th = std::tanh(u);
      value += -0.5 * eps * eps - log_std(j) - 0.5 * std::log(2.0 * std::numbers::pi) -
               log_one_minus_tanh_sq(u);
      const double d_u = 2.0 * th - g_action(j) * (1.0 - th * th);
      g_out(j, 0) = d_u / n;
      const bool inside = raw(j) >= tanh_gaussian::kMinLogStd &&
                          raw(j) <= tanh_gaussian::kMaxLogStd;
      g_out(k + j, 0) = inside ? (-1.0 + d_u * std::exp(log_std(j)) * eps) / n : 0.0;
    }
    loss += value / n;
    grad += policy.net().backward(trace, g_out);
  }
  return {loss, std::move(grad)};
}

std::pair<double, Eigen::VectorXd> gaussian_log_likelihood(
    const GaussianPolicy& policy, const std::vector<Eigen::VectorXd>& states,
    const std::vector<Eigen::VectorXd>& actions, const std::vector<double>& weights) {
  if (states.empty() || states.size() != actions.size() ||
      states.size() != weights.size()) {
    throw ValidationError("gaussian likelihood: batch sizes differ");
  }
  const double n = static_cast<double>(states.size());
  double value = 0.0;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(policy.net().num_params());
  Eigen::VectorXd g;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (weights[i] == 0.0) continue;
    value += weights[i] * policy.log_prob(states[i], actions[i], &g) / n;
    grad += (weights[i] / n) * g;
  }
  return {value, std::move(grad)};
}

TabularPolicy plain_bc(const Dataset& data, int n_states, int n_actions) {
  const Table w = pair_counts(data, Table::Ones(n_states, n_actions), true);
  return TabularPolicy(normalize_rows(w));
}

SoftmaxPolicy plain_bc(const Dataset& data, SoftmaxPolicy init,
                       const ExtractionConfig& config) {
  const Table w =
      pair_counts(data, Table::Ones(init.n_states(), init.n_actions()), true);
  return fit_weighted(w, std::move(init), config, nullptr);
}

double occupancy_divergence(const TabularMdp& mdp, const TabularPolicy& policy,
                            const Table& target) {
  if (target.rows() != mdp.n_states() || target.cols() != mdp.n_actions()) {
    throw ValidationError("occupancy_divergence: shape mismatch");
  }
  return kl_divergence(occupancy(mdp, policy).rho(), target);
}

}  // namespace o2il
