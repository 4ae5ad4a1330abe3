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

#ifndef O2IL_DATA_H_
#define O2IL_DATA_H_

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "o2il/mdp.h"
#include "o2il/tables.h"

namespace o2il {

// A state or action: an index in tabular mode, a feature vector otherwise.
using Point = std::variant<int, std::vector<double>>;

enum class Source { kExpert, kSupplementary };

struct Transition {
  Point state;
  Point action;
  Point next_state;
  bool is_episode_start = false;
  Source source = Source::kExpert;
  std::optional<double> reward;

  bool operator==(const Transition&) const = default;
};

struct DatasetMetadata {
  std::uint64_t seed = 0;
  std::string policy_tag;
  int horizon = 0;
};

struct Dataset {
  std::vector<Transition> transitions;
  DatasetMetadata metadata;

  std::size_t size() const { return transitions.size(); }
  bool empty() const { return transitions.empty(); }
  std::size_t count(Source source) const;
};

// Content equality: transitions only, metadata is carried by run configs.
bool operator==(const Dataset& lhs, const Dataset& rhs);

enum class SourceFilter { kAll, kExpert, kSupplementary };

struct EmpiricalDistribution {
  Table probs;
  Mask support;
};

struct EmpiricalOptions {
  // Weight the t-th step of each episode by discount^t.
  bool discount_weighted = false;
  double discount = 0.99;
  // Added to every normalized count before renormalizing; the support mask
  // still reflects raw counts.
  double smoothing = 0.0;
};

// Index of a tabular point; throws ValidationError for vector points.
int point_index(const Point& p);
bool is_tabular(const Point& p);

// n_traj episodes of `horizon` steps from s0 ~ mu with actions from the
// policy. Rewards are copied from the MDP reward table when present.
Dataset sample_trajectories(const TabularMdp& mdp, const TabularPolicy& policy,
                            int n_traj, int horizon, std::uint64_t seed,
                            Source source, const std::string& policy_tag = "");

EmpiricalDistribution empirical_distribution(
    const Dataset& dataset, SourceFilter filter, int n_states, int n_actions,
    const EmpiricalOptions& options = {});

// Concatenation preserving provenance. Kinds (tabular vs vector) must agree.
Dataset merge_datasets(const Dataset& expert, const Dataset& supplementary);

// Normalized counts of episode-start states.
Eigen::VectorXd estimate_initial_distribution(const Dataset& dataset,
                                              int n_states);

// Empirical transition model from counts; unseen pairs self-loop.
Eigen::MatrixXd empirical_transition(const Dataset& dataset, int n_states,
                                     int n_actions);

// One JSON object per line:
//   {"s": ..., "a": ..., "sn": ..., "start": bool, "src": "e"|"s"[, "r": x]}
void write_jsonl(const std::string& path, const Dataset& dataset);
Dataset read_jsonl(const std::string& path);

}  // namespace o2il

#endif  // O2IL_DATA_H_
