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

#include "o2il/data.h"

#include <cmath>
#include <fstream>
#include <random>
#include <string_view>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "o2il/error.h"

namespace o2il {
namespace {

template <typename Row>
int sample_index(const Row& probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double acc = 0.0;
  const auto n = static_cast<int>(probs.size());
  for (int i = 0; i < n; ++i) {
    acc += probs(i);
    if (u < acc) return i;
  }
  // Round-off: fall back to the last index with positive mass.
  for (int i = n - 1; i >= 0; --i) {
    if (probs(i) > 0.0) return i;
  }
  return n - 1;
}

bool matches(Source source, SourceFilter filter) {
  switch (filter) {
    case SourceFilter::kAll:
      return true;
    case SourceFilter::kExpert:
      return source == Source::kExpert;
    case SourceFilter::kSupplementary:
      return source == Source::kSupplementary;
  }
  return false;
}

nlohmann::json point_to_json(const Point& p) {
  if (const int* i = std::get_if<int>(&p)) return *i;
  return std::get<std::vector<double>>(p);
}

Point point_from_json(const nlohmann::json& j, std::string_view key) {
  if (j.is_number_integer()) return j.get<int>();
  if (j.is_array()) {
    std::vector<double> v;
    v.reserve(j.size());
    for (const auto& x : j) {
      if (!x.is_number()) {
        throw ValidationError(fmt::format("\"{}\" has a non-numeric entry", key));
      }
      v.push_back(x.get<double>());
    }
    return v;
  }
  throw ValidationError(fmt::format("\"{}\" must be an int or a float array", key));
}

}  // namespace

std::size_t Dataset::count(Source source) const {
  std::size_t n = 0;
  for (const auto& t : transitions) n += t.source == source ? 1 : 0;
  return n;
}

bool operator==(const Dataset& lhs, const Dataset& rhs) {
  return lhs.transitions == rhs.transitions;
}

int point_index(const Point& p) {
  if (const int* i = std::get_if<int>(&p)) return *i;
  throw ValidationError("expected a tabular (integer) point");
}

bool is_tabular(const Point& p) { return std::holds_alternative<int>(p); }

Dataset sample_trajectories(const TabularMdp& mdp, const TabularPolicy& policy,
                            int n_traj, int horizon, std::uint64_t seed,
                            Source source, const std::string& policy_tag) {
  if (n_traj < 1 || horizon < 1) {
    throw ValidationError("sample_trajectories: n_traj and horizon must be >= 1");
  }
  if (policy.n_states() != mdp.n_states() ||
      policy.n_actions() != mdp.n_actions()) {
    throw ValidationError("sample_trajectories: policy shape mismatch");
  }
  std::mt19937_64 rng(seed);
  Dataset out;
  out.metadata = {seed, policy_tag, horizon};
  out.transitions.reserve(static_cast<std::size_t>(n_traj) *
                          static_cast<std::size_t>(horizon));
  for (int ep = 0; ep < n_traj; ++ep) {
    int s = sample_index(mdp.initial(), rng);
    for (int t = 0; t < horizon; ++t) {
      const int a = sample_index(policy.probs().row(s), rng);
      const int sn =
          sample_index(mdp.transition().row(mdp.pair_index(s, a)), rng);
      Transition tr{s, a, sn, t == 0, source, std::nullopt};
      if (mdp.has_reward()) tr.reward = mdp.reward()(s, a);
      out.transitions.push_back(std::move(tr));
      s = sn;
    }
  }
  return out;
}

EmpiricalDistribution empirical_distribution(const Dataset& dataset,
                                             SourceFilter filter, int n_states,
                                             int n_actions,
                                             const EmpiricalOptions& options) {
  Table counts = Table::Zero(n_states, n_actions);
  double weight = 1.0;
  std::size_t used = 0;
  for (const auto& t : dataset.transitions) {
    if (options.discount_weighted) {
      weight = t.is_episode_start ? 1.0 : weight * options.discount;
    }
    if (!matches(t.source, filter)) continue;
    const int s = point_index(t.state);
    const int a = point_index(t.action);
    if (s < 0 || s >= n_states || a < 0 || a >= n_actions) {
      throw ValidationError(
          fmt::format("empirical_distribution: pair ({}, {}) out of range", s, a));
    }
    counts(s, a) += weight;
    ++used;
  }
  if (used == 0) {
    throw ValidationError("empirical_distribution: filter selects no transitions");
  }
  EmpiricalDistribution out;
  out.support = (counts.array() > 0.0).matrix();
  if (options.smoothing > 0.0) {
    counts /= counts.sum();
    counts.array() += options.smoothing;
  }
  out.probs = counts / counts.sum();
  return out;
}

Dataset merge_datasets(const Dataset& expert, const Dataset& supplementary) {
  if (!expert.empty() && !supplementary.empty()) {
    const auto& e = expert.transitions.front();
    const auto& s = supplementary.transitions.front();
    if (e.state.index() != s.state.index() || e.action.index() != s.action.index()) {
      throw ValidationError("merge_datasets: state/action kinds differ");
    }
  }
  Dataset out;
  out.metadata = expert.metadata;
  out.transitions.reserve(expert.size() + supplementary.size());
  out.transitions.insert(out.transitions.end(), expert.transitions.begin(),
                         expert.transitions.end());
  out.transitions.insert(out.transitions.end(),
                         supplementary.transitions.begin(),
                         supplementary.transitions.end());
  return out;
}

Eigen::VectorXd estimate_initial_distribution(const Dataset& dataset,
                                              int n_states) {
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(n_states);
  for (const auto& t : dataset.transitions) {
    if (!t.is_episode_start) continue;
    const int s = point_index(t.state);
    if (s < 0 || s >= n_states) {
      throw ValidationError("estimate_initial_distribution: state out of range");
    }
    counts(s) += 1.0;
  }
  if (counts.sum() == 0.0) {
    throw ValidationError("estimate_initial_distribution: no episode starts");
  }
  return counts / counts.sum();
}

Eigen::MatrixXd empirical_transition(const Dataset& dataset, int n_states,
                                     int n_actions) {
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n_states * n_actions, n_states);
  for (const auto& t : dataset.transitions) {
    const int s = point_index(t.state);
    const int a = point_index(t.action);
    const int sn = point_index(t.next_state);
    if (s < 0 || s >= n_states || a < 0 || a >= n_actions || sn < 0 ||
        sn >= n_states) {
      throw ValidationError("empirical_transition: index out of range");
    }
    counts(s * n_actions + a, sn) += 1.0;
  }
  for (int r = 0; r < counts.rows(); ++r) {
    const double z = counts.row(r).sum();
    if (z > 0.0) {
      counts.row(r) /= z;
    } else {
      counts(r, r / n_actions) = 1.0;
    }
  }
  return counts;
}

void write_jsonl(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw ValidationError(fmt::format("cannot write '{}'", path));
  for (const auto& t : dataset.transitions) {
    nlohmann::json j = {
        {"s", point_to_json(t.state)},
        {"a", point_to_json(t.action)},
        {"sn", point_to_json(t.next_state)},
        {"start", t.is_episode_start},
        {"src", t.source == Source::kExpert ? "e" : "s"},
    };
    if (t.reward) j["r"] = *t.reward;
    out << j.dump() << '\n';
  }
}

Dataset read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot open '{}'", path));
  Dataset out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object()) throw ValidationError("expected a JSON object");
      for (const auto& [key, value] : j.items()) {
        if (key != "s" && key != "a" && key != "sn" && key != "start" &&
            key != "src" && key != "r") {
          throw ValidationError(fmt::format("unknown key \"{}\"", key));
        }
      }
      Transition t;
      t.state = point_from_json(j.at("s"), "s");
      t.action = point_from_json(j.at("a"), "a");
      t.next_state = point_from_json(j.at("sn"), "sn");
      if (!j.at("start").is_boolean()) throw ValidationError("\"start\" must be bool");
      t.is_episode_start = j.at("start").get<bool>();
      const std::string src = j.at("src").get<std::string>();
      if (src == "e") {
        t.source = Source::kExpert;
      } else if (src == "s") {
        t.source = Source::kSupplementary;
      } else {
        throw ValidationError("\"src\" must be \"e\" or \"s\"");
      }
      if (j.contains("r")) {
        if (!j.at("r").is_number()) throw ValidationError("\"r\" must be a number");
        t.reward = j.at("r").get<double>();
      }
      out.transitions.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(fmt::format("{}:{}: {}", path, line_no, e.what()));
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("{}:{}: {}", path, line_no, e.what()));
    }
  }
  if (out.empty()) {
    throw ValidationError(fmt::format("{}: dataset file is empty", path));
  }
  return out;
}

}  // namespace o2il
