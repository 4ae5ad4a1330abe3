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

#ifndef O2IL_STITCH_H_
#define O2IL_STITCH_H_

#include <optional>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "o2il/nn.h"
#include "o2il/reward.h"
#include "o2il/tables.h"

namespace o2il {

// D0(s, a) = (1 + [d / (1 - d)] / (alpha y))^-1 with the clipped d.
double stitched_value(double d, double y, double alpha);

class StitchedDiscriminator {
 public:
  static StitchedDiscriminator tabular(DensityDiscriminator d, Table y,
                                       double alpha);
  // y = exp(log_y_net(features(s, a))).
  static StitchedDiscriminator neural(DensityDiscriminator d, Mlp log_y_net,
                                      FeatureMap features, double alpha);

  const DensityDiscriminator& d_part() const { return d_; }
  double alpha() const { return alpha_; }
  bool is_tabular() const { return !log_y_net_.has_value(); }
  bool trainable() const { return trainable_; }
  void set_trainable(bool trainable) { trainable_ = trainable; }

  double y(const Point& s, const Point& a) const;
  // log(alpha y) - logit(d).
  double logit(const Point& s, const Point& a) const;
  double operator()(const Point& s, const Point& a) const;

  Table y_table(int n_states, int n_actions) const;
  Table table(int n_states, int n_actions) const;

  nlohmann::json to_json() const;
  static StitchedDiscriminator from_json(const nlohmann::json& j);

 private:
  DensityDiscriminator d_;
  Table y_;
  std::optional<Mlp> log_y_net_;
  std::optional<FeatureMap> features_;
  double alpha_ = 1.0;
  bool trainable_ = true;
};

// Largest |D0 - rho* / (rho* + rho_e)| over pairs where both rho_e and
// rho_o are positive, with rho* = rho_o * alpha * y.
double verify_alignment(const StitchedDiscriminator& stitched, const Table& rho_e,
                        const Table& rho_o, const Table& y);

}  // namespace o2il

#endif  // O2IL_STITCH_H_
