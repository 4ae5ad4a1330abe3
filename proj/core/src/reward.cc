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

#include "o2il/reward.h"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "o2il/error.h"

namespace o2il {

FeatureMap::FeatureMap(bool one_hot_states, int state_dim, bool one_hot_actions,
                       int action_dim)
    : one_hot_states_(one_hot_states),
      state_dim_(state_dim),
      one_hot_actions_(one_hot_actions),
      action_dim_(action_dim) {
  if (state_dim_ < 1 || action_dim_ < 1) {
    throw ValidationError("FeatureMap: dimensions must be positive");
  }
}

FeatureMap FeatureMap::tabular(int n_states, int n_actions) {
  return FeatureMap(true, n_states, true, n_actions);
}

FeatureMap FeatureMap::continuous(int state_dim, int action_dim) {
  return FeatureMap(false, state_dim, false, action_dim);
}

void FeatureMap::encode(const Point& p, bool one_hot, int dim, double* out) const {
  if (one_hot) {
    const int i = point_index(p);
    if (i < 0 || i >= dim) {
      throw ValidationError(fmt::format("FeatureMap: index {} out of range", i));
    }
    std::fill(out, out + dim, 0.0);
    out[i] = 1.0;
    return;
  }
  const auto* v = std::get_if<std::vector<double>>(&p);
  if (v == nullptr || static_cast<int>(v->size()) != dim) {
    throw ValidationError(
        fmt::format("FeatureMap: expected a {}-dimensional vector point", dim));
  }
  std::copy(v->begin(), v->end(), out);
}

Eigen::VectorXd FeatureMap::state(const Point& s) const {
  Eigen::VectorXd out(state_dim_);
  encode(s, one_hot_states_, state_dim_, out.data());
  return out;
}

Eigen::VectorXd FeatureMap::action(const Point& a) const {
  Eigen::VectorXd out(action_dim_);
  encode(a, one_hot_actions_, action_dim_, out.data());
  return out;
}

Eigen::VectorXd FeatureMap::state_action(const Point& s, const Point& a) const {
  Eigen::VectorXd out(input_dim());
  encode(s, one_hot_states_, state_dim_, out.data());
  encode(a, one_hot_actions_, action_dim_, out.data() + state_dim_);
  return out;
}

nlohmann::json FeatureMap::to_json() const {
  return {{"one_hot_states", one_hot_states_},
          {"state_dim", state_dim_},
          {"one_hot_actions", one_hot_actions_},
          {"action_dim", action_dim_}};
}

FeatureMap FeatureMap::from_json(const nlohmann::json& j) {
  try {
    return FeatureMap(j.at("one_hot_states").get<bool>(),
                      j.at("state_dim").get<int>(),
                      j.at("one_hot_actions").get<bool>(),
                      j.at("action_dim").get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("FeatureMap json: {}", e.what()));
  }
}

DensityDiscriminator DensityDiscriminator::tabular(Table raw, Mask defined,
                                                   ClipBounds clip) {
  if (raw.rows() != defined.rows() || raw.cols() != defined.cols()) {
    throw ValidationError("DensityDiscriminator: mask shape mismatch");
  }
  if (!(clip.lo >= 0.0 && clip.lo < clip.hi && clip.hi <= 1.0)) {
    throw ValidationError("DensityDiscriminator: invalid clip bounds");
  }
  DensityDiscriminator d;
  d.raw_ = std::move(raw);
  d.defined_ = std::move(defined);
  d.clip_ = clip;
  return d;
}

DensityDiscriminator DensityDiscriminator::with_clip(ClipBounds clip) const {
  if (!(clip.lo >= 0.0 && clip.lo < clip.hi && clip.hi <= 1.0)) {
    throw ValidationError("DensityDiscriminator: invalid clip bounds");
  }
  DensityDiscriminator d = *this;
  d.clip_ = clip;
  return d;
}

DensityDiscriminator DensityDiscriminator::neural(Mlp net, FeatureMap features,
                                                  ClipBounds clip) {
  if (net.input_size() != features.input_dim() || net.output_size() != 1) {
    throw ValidationError("DensityDiscriminator: network/feature mismatch");
  }
  DensityDiscriminator d;
  d.net_ = std::move(net);
  d.features_ = std::move(features);
  d.clip_ = clip;
  return d;
}

double DensityDiscriminator::raw(int s, int a) const {
  if (net_) {
    const Eigen::VectorXd x = features_->state_action(s, a);
    return sigmoid(net_->forward(x)(0, 0));
  }
  if (s < 0 || s >= raw_.rows() || a < 0 || a >= raw_.cols()) {
    throw ValidationError("DensityDiscriminator: pair out of range");
  }
  return defined_(s, a) ? raw_(s, a) : clip_.lo;
}

double DensityDiscriminator::operator()(const Point& s, const Point& a) const {
  if (net_) {
    const Eigen::VectorXd x = features_->state_action(s, a);
    return clip_.apply(sigmoid(net_->forward(x)(0, 0)));
  }
  return (*this)(point_index(s), point_index(a));
}

Table DensityDiscriminator::table(int n_states, int n_actions) const {
  Table out(n_states, n_actions);
  if (net_) {
    Eigen::MatrixXd inputs(features_->input_dim(), n_states * n_actions);
    for (int s = 0; s < n_states; ++s) {
      for (int a = 0; a < n_actions; ++a) {
        inputs.col(s * n_actions + a) = features_->state_action(s, a);
      }
    }
    const Eigen::MatrixXd logits = net_->forward(inputs);
    for (int s = 0; s < n_states; ++s) {
      for (int a = 0; a < n_actions; ++a) {
        out(s, a) = clip_.apply(sigmoid(logits(0, s * n_actions + a)));
      }
    }
    return out;
  }
  if (raw_.rows() != n_states || raw_.cols() != n_actions) {
    throw ValidationError("DensityDiscriminator: table shape mismatch");
  }
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) out(s, a) = (*this)(s, a);
  }
  return out;
}

const Mlp& DensityDiscriminator::net() const {
  if (!net_) throw ValidationError("DensityDiscriminator: not a neural model");
  return *net_;
}

const FeatureMap& DensityDiscriminator::features() const {
  if (!features_) throw ValidationError("DensityDiscriminator: not a neural model");
  return *features_;
}

nlohmann::json DensityDiscriminator::to_json() const {
  nlohmann::json j = {{"clip", {clip_.lo, clip_.hi}}};
  if (net_) {
    j["kind"] = "neural";
    j["net"] = net_->to_json();
    j["features"] = features_->to_json();
  } else {
    j["kind"] = "tabular";
    j["raw"] = matrix_to_json(raw_);
    nlohmann::json mask = nlohmann::json::array();
    for (Eigen::Index s = 0; s < defined_.rows(); ++s) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index a = 0; a < defined_.cols(); ++a) row.push_back(defined_(s, a));
      mask.push_back(std::move(row));
    }
    j["defined"] = std::move(mask);
  }
  return j;
}

DensityDiscriminator DensityDiscriminator::from_json(const nlohmann::json& j) {
  try {
    const auto clip_pair = j.at("clip").get<std::vector<double>>();
    if (clip_pair.size() != 2) throw ValidationError("discriminator json: bad clip");
    const ClipBounds clip{clip_pair[0], clip_pair[1]};
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "neural") {
      return neural(Mlp::from_json(j.at("net")), FeatureMap::from_json(j.at("features")),
                    clip);
    }
    if (kind != "tabular") throw ValidationError("discriminator json: unknown kind");
    Table raw = matrix_from_json(j.at("raw"), "discriminator json: raw");
    const auto& mask_json = j.at("defined");
    Mask mask(raw.rows(), raw.cols());
    if (static_cast<Eigen::Index>(mask_json.size()) != raw.rows()) {
      throw ValidationError("discriminator json: mask shape mismatch");
    }
    for (Eigen::Index s = 0; s < raw.rows(); ++s) {
      const auto& row = mask_json[static_cast<std::size_t>(s)];
      if (static_cast<Eigen::Index>(row.size()) != raw.cols()) {
        throw ValidationError("discriminator json: mask shape mismatch");
      }
      for (Eigen::Index a = 0; a < raw.cols(); ++a) {
        mask(s, a) = row[static_cast<std::size_t>(a)].get<bool>();
      }
    }
    return tabular(std::move(raw), std::move(mask), clip);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("discriminator json: {}", e.what()));
  }
}

DensityDiscriminator fit_discriminator_closed_form(
    const EmpiricalDistribution& rho_e, const EmpiricalDistribution& rho_o,
    ClipBounds clip) {
  if (rho_e.probs.rows() != rho_o.probs.rows() ||
      rho_e.probs.cols() != rho_o.probs.cols()) {
    throw ValidationError("fit_discriminator_closed_form: shape mismatch");
  }
  const Table denom = rho_e.probs + rho_o.probs;
  Table raw = Table::Zero(denom.rows(), denom.cols());
  Mask defined = (denom.array() > 0.0).matrix();
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    if (defined.data()[i]) raw.data()[i] = rho_e.probs.data()[i] / denom.data()[i];
  }
  return DensityDiscriminator::tabular(std::move(raw), std::move(defined), clip);
}

std::pair<double, Eigen::VectorXd> logistic_loss_and_gradient(
    const Mlp& net, const Eigen::MatrixXd& expert_inputs,
    const Eigen::MatrixXd& union_inputs) {
  const double ne = static_cast<double>(expert_inputs.cols());
  const double no = static_cast<double>(union_inputs.cols());
  if (ne == 0.0 || no == 0.0) {
    throw ValidationError("logistic_loss_and_gradient: empty batch");
  }
  MlpTrace trace_e;
  MlpTrace trace_o;
  const Eigen::MatrixXd ze = net.forward(expert_inputs, trace_e);
  const Eigen::MatrixXd zo = net.forward(union_inputs, trace_o);
  double loss = 0.0;
  Eigen::MatrixXd ge(1, ze.cols());
  Eigen::MatrixXd go(1, zo.cols());
  for (Eigen::Index i = 0; i < ze.cols(); ++i) {
    loss -= log_sigmoid(ze(0, i)) / ne;
    ge(0, i) = -(1.0 - sigmoid(ze(0, i))) / ne;
  }
  for (Eigen::Index i = 0; i < zo.cols(); ++i) {
    loss -= log_sigmoid(-zo(0, i)) / no;
    go(0, i) = sigmoid(zo(0, i)) / no;
  }
  Eigen::VectorXd grad = net.backward(trace_e, ge) + net.backward(trace_o, go);
  return {loss, std::move(grad)};
}

namespace {

Eigen::MatrixXd encode_all(const Dataset& data, const FeatureMap& features) {
  Eigen::MatrixXd out(features.input_dim(), static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& t = data.transitions[i];
    out.col(static_cast<Eigen::Index>(i)) = features.state_action(t.state, t.action);
  }
  return out;
}

Eigen::MatrixXd draw_columns(const Eigen::MatrixXd& all, int batch,
                             std::mt19937_64& rng) {
  std::uniform_int_distribution<Eigen::Index> pick(0, all.cols() - 1);
  Eigen::MatrixXd out(all.rows(), batch);
  for (int i = 0; i < batch; ++i) out.col(i) = all.col(pick(rng));
  return out;
}

}  // namespace

LogisticFit fit_discriminator_logistic(const Dataset& expert,
                                       const Dataset& union_data,
                                       const FeatureMap& features,
                                       const LogisticFitConfig& config) {
  if (config.steps < 1) throw ValidationError("logistic fit: steps must be >= 1");
  if (expert.empty() || union_data.empty()) {
    throw ValidationError("logistic fit: datasets must be nonempty");
  }
  if (!(config.lr > 0.0) || config.batch < 1) {
    throw ValidationError("logistic fit: lr and batch must be positive");
  }
  std::vector<int> widths{features.input_dim()};
  widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
  widths.push_back(1);
  Mlp net(widths, config.seed);
  Adam adam(net.num_params(), {.lr = config.lr});
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  const Eigen::MatrixXd expert_x = encode_all(expert, features);
  const Eigen::MatrixXd union_x = encode_all(union_data, features);

  LogisticFit fit{DensityDiscriminator{}, {}};
  fit.loss_trace.reserve(static_cast<std::size_t>(config.steps));
  for (int step = 0; step < config.steps; ++step) {
    auto [loss, grad] =
        config.full_batch
            ? logistic_loss_and_gradient(net, expert_x, union_x)
            : logistic_loss_and_gradient(net, draw_columns(expert_x, config.batch, rng),
                                         draw_columns(union_x, config.batch, rng));
    if (!std::isfinite(loss) || !grad.allFinite()) {
      throw NumericalError(
          fmt::format("logistic fit diverged at step {} (loss {})", step, loss));
    }
    fit.loss_trace.push_back(loss);
    if (config.sgd) {
      net.params() -= config.lr * grad;
    } else {
      adam.descend(net.params(), grad);
    }
  }
  fit.discriminator = DensityDiscriminator::neural(std::move(net), features, config.clip);
  return fit;
}

double auxiliary_reward_value(double d, double alpha, double beta) {
  return alpha * std::log(d / (1.0 - d)) + beta;
}

AuxiliaryReward auxiliary_reward(const DensityDiscriminator& d, int n_states,
                                 int n_actions, double alpha, double beta) {
  if (!(alpha > 0.0)) throw ValidationError("auxiliary_reward: alpha must be > 0");
  if (!(beta >= 0.0)) throw ValidationError("auxiliary_reward: beta must be >= 0");
  const Table dt = d.table(n_states, n_actions);
  AuxiliaryReward out{Table(n_states, n_actions), alpha, beta};
  for (Eigen::Index i = 0; i < dt.size(); ++i) {
    out.values.data()[i] = auxiliary_reward_value(dt.data()[i], alpha, beta);
  }
  return out;
}

}  // namespace o2il
