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

#ifndef O2IL_NN_H_
#define O2IL_NN_H_

#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace o2il {

// Activations recorded by Mlp::forward for the backward pass. Column j of
// every matrix belongs to batch element j.
struct MlpTrace {
  std::vector<Eigen::MatrixXd> layer_inputs;
  std::vector<Eigen::MatrixXd> pre_activations;

  bool empty() const { return layer_inputs.empty(); }
};

// Fully connected network with ReLU hidden layers and a linear output layer.
// Heads (sigmoid, log-space scalar, tanh-Gaussian) are applied by callers on
// top of the raw outputs. All parameters live in one flat vector so that
// optimizers and finite-difference checks can treat them uniformly.
class Mlp {
 public:
  Mlp() = default;
  // widths = {input, hidden..., output}. Weights and biases are drawn from
  // U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Mlp(std::vector<int> widths, std::uint64_t seed);

  const std::vector<int>& widths() const { return widths_; }
  int input_size() const { return widths_.front(); }
  int output_size() const { return widths_.back(); }
  Eigen::Index num_params() const { return params_.size(); }
  int num_layers() const { return static_cast<int>(widths_.size()) - 1; }

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  // input is (input_size x batch); returns (output_size x batch).
  Eigen::MatrixXd forward(const Eigen::MatrixXd& input) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& input, MlpTrace& trace) const;

  // Gradient of sum_{i,j} output_grad(i,j) * out(i,j) with respect to the
  // parameters, accumulated over the batch. Optionally also returns the
  // gradient with respect to the input.
  Eigen::VectorXd backward(const MlpTrace& trace,
                           const Eigen::MatrixXd& output_grad,
                           Eigen::MatrixXd* input_grad = nullptr) const;

  // Versioned architecture descriptor plus parameter blob.
  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& j);

 private:
  using MatMap = Eigen::Map<Eigen::MatrixXd>;
  using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;

  ConstMatMap weight(int layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;
  void layout();

  std::vector<int> widths_;
  Eigen::VectorXd params_;
  std::vector<Eigen::Index> weight_offset_;
  std::vector<Eigen::Index> bias_offset_;
};

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adaptive-moment optimizer state (first and second moments plus the step
// counter) for one flat parameter vector.
class Adam {
 public:
  Adam() = default;
  Adam(Eigen::Index n, AdamOptions options);

  void descend(Eigen::Ref<Eigen::VectorXd> params,
               const Eigen::Ref<const Eigen::VectorXd>& grad);
  void ascend(Eigen::Ref<Eigen::VectorXd> params,
              const Eigen::Ref<const Eigen::VectorXd>& grad);

  const AdamOptions& options() const { return options_; }
  void set_lr(double lr) { options_.lr = lr; }
  long steps() const { return steps_; }
  const Eigen::VectorXd& first_moment() const { return m_; }
  const Eigen::VectorXd& second_moment() const { return v_; }

 private:
  AdamOptions options_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  long steps_ = 0;
};

inline Eigen::Map<Eigen::VectorXd> flat(Eigen::MatrixXd& m) {
  return {m.data(), m.size()};
}
inline Eigen::Map<const Eigen::VectorXd> flat(const Eigen::MatrixXd& m) {
  return {m.data(), m.size()};
}

double sigmoid(double x);
// log(sigmoid(x)) without overflow.
double log_sigmoid(double x);

// Tanh-squashed diagonal Gaussian: a = tanh(u), u ~ N(mean, exp(log_std)^2).
namespace tanh_gaussian {

constexpr double kMinLogStd = -5.0;
constexpr double kMaxLogStd = 2.0;

struct LogProb {
  double value = 0.0;
  Eigen::VectorXd d_mean;
  Eigen::VectorXd d_log_std;
};

// log density of an action in (-1, 1)^k including the change-of-variables
// term -sum log(1 - tanh(u)^2), with gradients in mean and log_std.
LogProb log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                 const Eigen::VectorXd& action);

// Reparameterized draw u = mean + exp(log_std) * noise, a = tanh(u).
struct Sample {
  Eigen::VectorXd pre_tanh;
  Eigen::VectorXd action;
};
Sample sample(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
              const Eigen::VectorXd& noise);

}  // namespace tanh_gaussian

}  // namespace o2il

#endif  // O2IL_NN_H_
