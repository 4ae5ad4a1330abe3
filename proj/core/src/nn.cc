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

#include "o2il/nn.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "o2il/error.h"

namespace o2il {

Mlp::Mlp(std::vector<int> widths, std::uint64_t seed) : widths_(std::move(widths)) {
  if (widths_.size() < 2) {
    throw ValidationError("Mlp: need at least input and output widths");
  }
  for (int w : widths_) {
    if (w < 1) throw ValidationError("Mlp: layer widths must be positive");
  }
  layout();
  std::mt19937_64 rng(seed);
  for (int l = 0; l < num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths_[l]));
    std::uniform_real_distribution<double> init(-bound, bound);
    const Eigen::Index n = static_cast<Eigen::Index>(widths_[l + 1]) * (widths_[l] + 1);
    for (Eigen::Index i = 0; i < n; ++i) params_(weight_offset_[l] + i) = init(rng);
  }
}

void Mlp::layout() {
  weight_offset_.clear();
  bias_offset_.clear();
  Eigen::Index offset = 0;
  for (int l = 0; l < num_layers(); ++l) {
    weight_offset_.push_back(offset);
    offset += static_cast<Eigen::Index>(widths_[l + 1]) * widths_[l];
    bias_offset_.push_back(offset);
    offset += widths_[l + 1];
  }
  params_ = Eigen::VectorXd::Zero(offset);
}

Mlp::ConstMatMap Mlp::weight(int layer) const {
  return ConstMatMap(params_.data() + weight_offset_[layer], widths_[layer + 1],
                     widths_[layer]);
}

Eigen::Map<const Eigen::VectorXd> Mlp::bias(int layer) const {
  return {params_.data() + bias_offset_[layer], widths_[layer + 1]};
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input) const {
  MlpTrace scratch;
  return forward(input, scratch);
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input, MlpTrace& trace) const {
  if (widths_.empty()) throw ValidationError("Mlp: network is empty");
  if (input.rows() != input_size()) {
    throw ValidationError(fmt::format("Mlp: input width {} does not match {}",
                                      input.rows(), input_size()));
  }
  trace.layer_inputs.clear();
  trace.pre_activations.clear();
  Eigen::MatrixXd h = input;
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::MatrixXd z = weight(l) * h;
    z.colwise() += bias(l);
    trace.layer_inputs.push_back(std::move(h));
    if (l + 1 < num_layers()) {
      h = z.cwiseMax(0.0);
    } else {
      h = z;
    }
    trace.pre_activations.push_back(std::move(z));
  }
  return h;
}

Eigen::VectorXd Mlp::backward(const MlpTrace& trace,
                              const Eigen::MatrixXd& output_grad,
                              Eigen::MatrixXd* input_grad) const {
  if (trace.empty() || static_cast<int>(trace.layer_inputs.size()) != num_layers()) {
    throw ValidationError("Mlp::backward: missing forward trace");
  }
  const Eigen::Index batch = trace.layer_inputs.front().cols();
  if (output_grad.rows() != output_size() || output_grad.cols() != batch) {
    throw ValidationError("Mlp::backward: output gradient shape mismatch");
  }
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params_.size());
  Eigen::MatrixXd g = output_grad;
  for (int l = num_layers() - 1; l >= 0; --l) {
    if (l + 1 < num_layers()) {
      g = g.cwiseProduct(
          (trace.pre_activations[l].array() > 0.0).cast<double>().matrix());
    }
    MatMap gw(grad.data() + weight_offset_[l], widths_[l + 1], widths_[l]);
    gw.noalias() = g * trace.layer_inputs[l].transpose();
    grad.segment(bias_offset_[l], widths_[l + 1]) = g.rowwise().sum();
    if (l > 0 || input_grad != nullptr) g = weight(l).transpose() * g;
  }
  if (input_grad != nullptr) *input_grad = std::move(g);
  return grad;
}

nlohmann::json Mlp::to_json() const {
  std::vector<double> blob(params_.data(), params_.data() + params_.size());
  return {{"format", "o2il-mlp"},
          {"version", 1},
          {"widths", widths_},
          {"activation", "relu"},
          {"params", std::move(blob)}};
}

Mlp Mlp::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "o2il-mlp") {
      throw ValidationError("Mlp json: unknown format");
    }
    if (j.at("version").get<int>() != 1) {
      throw ValidationError("Mlp json: unsupported version");
    }
    if (j.at("activation").get<std::string>() != "relu") {
      throw ValidationError("Mlp json: unsupported activation");
    }
    Mlp net;
    net.widths_ = j.at("widths").get<std::vector<int>>();
    if (net.widths_.size() < 2) throw ValidationError("Mlp json: bad widths");
    net.layout();
    const auto blob = j.at("params").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(blob.size()) != net.params_.size()) {
      throw ValidationError(fmt::format(
          "Mlp json: {} parameters, architecture needs {}", blob.size(),
          net.params_.size()));
    }
    net.params_ = Eigen::Map<const Eigen::VectorXd>(
        blob.data(), static_cast<Eigen::Index>(blob.size()));
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("Mlp json: {}", e.what()));
  }
}

Adam::Adam(Eigen::Index n, AdamOptions options)
    : options_(options),
      m_(Eigen::VectorXd::Zero(n)),
      v_(Eigen::VectorXd::Zero(n)) {}

void Adam::descend(Eigen::Ref<Eigen::VectorXd> params,
                   const Eigen::Ref<const Eigen::VectorXd>& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw ValidationError("Adam: state shape does not match parameters");
  }
  ++steps_;
  m_ = options_.beta1 * m_ + (1.0 - options_.beta1) * grad;
  v_ = options_.beta2 * v_ + (1.0 - options_.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(steps_));
  params.array() -= options_.lr * (m_.array() / c1) /
                    ((v_.array() / c2).sqrt() + options_.eps);
}

void Adam::ascend(Eigen::Ref<Eigen::VectorXd> params,
                  const Eigen::Ref<const Eigen::VectorXd>& grad) {
  const Eigen::VectorXd negated = -grad;
  descend(params, negated);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

namespace tanh_gaussian {
namespace {

// log(1 - tanh(u)^2), stable for large |u|.
double log_one_minus_tanh_sq(double u) {
  const double au = std::abs(u);
  return 2.0 * (std::numbers::ln2 - au - std::log1p(std::exp(-2.0 * au)));
}

}  // namespace

LogProb log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                 const Eigen::VectorXd& action) {
  const Eigen::Index k = mean.size();
  if (log_std.size() != k || action.size() != k) {
    throw ValidationError("tanh_gaussian::log_prob: dimension mismatch");
  }
  LogProb out;
  out.d_mean.resize(k);
  out.d_log_std.resize(k);
  constexpr double kEdge = 1.0 - 1e-12;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double a = std::clamp(action(i), -kEdge, kEdge);
    const double u = std::atanh(a);
    const double sigma = std::exp(log_std(i));
    const double z = (u - mean(i)) / sigma;
    out.value += -0.5 * z * z - log_std(i) -
                 0.5 * std::log(2.0 * std::numbers::pi) - log_one_minus_tanh_sq(u);
    out.d_mean(i) = z / sigma;
    out.d_log_std(i) = z * z - 1.0;
  }
  return out;
}

Sample sample(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
              const Eigen::VectorXd& noise) {
  Sample s;
  s.pre_tanh = mean.array() + log_std.array().exp() * noise.array();
  s.action = s.pre_tanh.array().tanh();
  return s;
}

}  // namespace tanh_gaussian

}  // namespace o2il
