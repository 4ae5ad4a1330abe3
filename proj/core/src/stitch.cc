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

#include "o2il/stitch.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "o2il/error.h"

namespace o2il {

double stitched_value(double d, double y, double alpha) {
  return 1.0 / (1.0 + (d / (1.0 - d)) / (alpha * y));
}

StitchedDiscriminator StitchedDiscriminator::tabular(DensityDiscriminator d, Table y,
                                                     double alpha) {
  if (!(alpha > 0.0)) throw ValidationError("stitch: alpha must be positive");
  if (!y.allFinite() || (y.array() <= 0.0).any()) {
    throw ValidationError("stitch: y must be positive and finite");
  }
  StitchedDiscriminator out;
  out.d_ = std::move(d);
  out.y_ = std::move(y);
  out.alpha_ = alpha;
  return out;
}

StitchedDiscriminator StitchedDiscriminator::neural(DensityDiscriminator d,
                                                    Mlp log_y_net,
                                                    FeatureMap features,
                                                    double alpha) {
  if (!(alpha > 0.0)) throw ValidationError("stitch: alpha must be positive");
  if (log_y_net.input_size() != features.input_dim() || log_y_net.output_size() != 1) {
    throw ValidationError("stitch: y network does not match the features");
  }
  StitchedDiscriminator out;
  out.d_ = std::move(d);
  out.log_y_net_ = std::move(log_y_net);
  out.features_ = std::move(features);
  out.alpha_ = alpha;
  return out;
}

double StitchedDiscriminator::y(const Point& s, const Point& a) const {
  if (log_y_net_) {
    return std::exp(log_y_net_->forward(features_->state_action(s, a))(0, 0));
  }
  const int si = point_index(s);
  const int ai = point_index(a);
  if (si < 0 || si >= y_.rows() || ai < 0 || ai >= y_.cols()) {
    throw ValidationError("stitch: pair out of range");
  }
  return y_(si, ai);
}

double StitchedDiscriminator::logit(const Point& s, const Point& a) const {
  const double d = d_(s, a);
  return std::log(alpha_ * y(s, a)) - std::log(d / (1.0 - d));
}

double StitchedDiscriminator::operator()(const Point& s, const Point& a) const {
  return stitched_value(d_(s, a), y(s, a), alpha_);
}

Table StitchedDiscriminator::y_table(int n_states, int n_actions) const {
  if (!log_y_net_) return y_;
  Table out(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) out(s, a) = y(s, a);
  }
  return out;
}

Table StitchedDiscriminator::table(int n_states, int n_actions) const {
  const Table d = d_.table(n_states, n_actions);
  const Table y = y_table(n_states, n_actions);
  Table out(n_states, n_actions);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out.data()[i] = stitched_value(d.data()[i], y.data()[i], alpha_);
  }
  return out;
}

nlohmann::json StitchedDiscriminator::to_json() const {
  nlohmann::json j = {{"kind", "stitched"},
                      {"alpha", alpha_},
                      {"trainable", trainable_},
                      {"d", d_.to_json()}};
  if (log_y_net_) {
    j["log_y_net"] = log_y_net_->to_json();
    j["features"] = features_->to_json();
  } else {
    j["y"] = matrix_to_json(y_);
  }
  return j;
}

StitchedDiscriminator StitchedDiscriminator::from_json(const nlohmann::json& j) {
  try {
    if (j.at("kind").get<std::string>() != "stitched") {
      throw ValidationError("stitched json: wrong kind");
    }
    DensityDiscriminator d = DensityDiscriminator::from_json(j.at("d"));
    const double alpha = j.at("alpha").get<double>();
    StitchedDiscriminator out =
        j.contains("log_y_net")
            ? neural(std::move(d), Mlp::from_json(j.at("log_y_net")),
                     FeatureMap::from_json(j.at("features")), alpha)
            : tabular(std::move(d), matrix_from_json(j.at("y"), "stitched y"), alpha);
    out.trainable_ = j.value("trainable", true);
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("stitched json: {}", e.what()));
  }
}

double verify_alignment(const StitchedDiscriminator& stitched, const Table& rho_e,
                        const Table& rho_o, const Table& y) {
  if (rho_e.rows() != rho_o.rows() || rho_e.cols() != rho_o.cols() ||
      y.rows() != rho_o.rows() || y.cols() != rho_o.cols()) {
    throw ValidationError("verify_alignment: shape mismatch");
  }
  double worst = 0.0;
  for (int s = 0; s < rho_o.rows(); ++s) {
    for (int a = 0; a < rho_o.cols(); ++a) {
      if (!(rho_e(s, a) > 0.0 && rho_o(s, a) > 0.0)) continue;
      const double rho_star = rho_o(s, a) * stitched.alpha() * y(s, a);
      const double target = rho_star / (rho_star + rho_e(s, a));
      worst = std::max(worst, std::abs(stitched(s, a) - target));
    }
  }
  return worst;
}

}  // namespace o2il
