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

#include "run_config.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "o2il/error.h"

namespace o2il::cli {
namespace {

// Defaults follow the reference hyperparameters; desk-scale overrides live in
// tools/configs.
const std::map<std::string, std::string>& default_values() {
  static const std::map<std::string, std::string> values = {
      {"seed", "0"},
      {"out", "run"},

      {"env.width", "8"},
      {"env.height", "8"},
      {"env.goal_x", "7"},
      {"env.goal_y", "7"},
      {"env.slip", "0.1"},
      {"env.step_penalty", "-0.01"},
      {"env.discount", "0.99"},

      {"data.expert_traj", "5"},
      {"data.random_traj", "200"},
      {"data.horizon", "100"},

      {"reward.method", "closed_form"},
      {"reward.clip_lo", "0.1"},
      {"reward.clip_hi", "0.9"},
      {"reward.alpha", "1"},
      {"reward.beta", "0"},
      {"reward.steps", "5000"},
      {"reward.lr", "1e-5"},
      {"reward.batch", "256"},
      {"reward.hidden", "256,256"},

      {"ssp.mode", "exact"},
      {"ssp.model", "empirical"},
      {"ssp.alpha", "1"},
      {"ssp.lr_nu", "3e-4"},
      {"ssp.lr_y", "3e-4"},
      {"ssp.iterations", "200000"},
      {"ssp.batch", "256"},
      {"ssp.smoothing", "1e-6"},
      {"ssp.undiscounted", "false"},
      {"ssp.log_every", "100"},

      {"policy.method", "closed_form"},
      {"policy.steps", "1000"},
      {"policy.lr", "1e-4"},

      {"stitch.clip_lo", "1e-4"},

      {"gail.episodes", "200"},
      {"gail.horizon", "100"},
      {"gail.episodes_per_iter", "4"},
      {"gail.disc_steps", "1"},
      {"gail.policy_steps", "1"},
      {"gail.lr_disc", "1e-5"},
      {"gail.lr_policy", "1e-4"},
      {"gail.reward", "neg_log_d"},
      {"gail.init_std", "0.5"},
      {"gail.expert_batch", "0"},

      {"offrl.alpha", "1"},

      {"oracle.alphas", "0.5,1,2"},
      {"oracle.tolerance", "1e-3"},
  };
  return values;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ValidationError(fmt::format("config key '{}': '{}' is not a number", key, text));
  }
  return v;
}

long parse_long(const std::string& key, const std::string& text) {
  long v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ValidationError(fmt::format("config key '{}': '{}' is not an integer", key, text));
  }
  return v;
}

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

RunConfig::RunConfig() : values_(default_values()) {}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ValidationError(fmt::format("unknown config key '{}'", key));
  it->second = value;
}

void RunConfig::assign(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ValidationError(fmt::format("expected key=value, got '{}'", assignment));
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot read config {}", path));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      assign(line);
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("{}:{}: {}", path, line_no, e.what()));
    }
  }
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ValidationError(fmt::format("unknown config key '{}'", key));
  return it->second;
}

double RunConfig::number(const std::string& key) const {
  return parse_double(key, get(key));
}

long RunConfig::integer(const std::string& key) const { return parse_long(key, get(key)); }

bool RunConfig::flag(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ValidationError(fmt::format("config key '{}': '{}' is not a boolean", key, v));
}

std::vector<double> RunConfig::numbers(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split(get(key))) out.push_back(parse_double(key, item));
  return out;
}

std::vector<int> RunConfig::integers(const std::string& key) const {
  std::vector<int> out;
  for (const auto& item : split(get(key))) {
    out.push_back(static_cast<int>(parse_long(key, item)));
  }
  return out;
}

std::string RunConfig::snapshot() const {
  std::string out;
  for (const auto& [k, v] : values_) out += fmt::format("{}={}\n", k, v);
  return out;
}

void RunConfig::write_snapshot(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ValidationError(fmt::format("cannot write {}", path));
  out << snapshot();
}

GridworldSpec gridworld_spec(const RunConfig& config) {
  GridworldSpec spec;
  spec.width = static_cast<int>(config.integer("env.width"));
  spec.height = static_cast<int>(config.integer("env.height"));
  spec.goal = {static_cast<int>(config.integer("env.goal_x")),
               static_cast<int>(config.integer("env.goal_y"))};
  spec.slip = config.number("env.slip");
  spec.step_penalty = config.number("env.step_penalty");
  spec.discount = config.number("env.discount");
  return spec;
}

ClipBounds reward_clip(const RunConfig& config) {
  return {config.number("reward.clip_lo"), config.number("reward.clip_hi")};
}

SspConfig ssp_config(const RunConfig& config) {
  SspConfig out;
  out.alpha = config.number("ssp.alpha");
  out.lr_nu = config.number("ssp.lr_nu");
  out.lr_y = config.number("ssp.lr_y");
  out.iterations = config.integer("ssp.iterations");
  out.batch = static_cast<int>(config.integer("ssp.batch"));
  out.undiscounted = config.flag("ssp.undiscounted");
  out.log_every = static_cast<int>(config.integer("ssp.log_every"));
  out.seed = static_cast<std::uint64_t>(config.integer("seed"));
  const std::string& mode = config.get("ssp.mode");
  if (mode == "exact") {
    out.mode = SspMode::kExact;
  } else if (mode == "full_batch") {
    out.mode = SspMode::kFullBatch;
  } else if (mode == "stochastic") {
    out.mode = SspMode::kStochastic;
  } else {
    throw ValidationError(
        fmt::format("ssp.mode: '{}' (expected exact, full_batch or stochastic)", mode));
  }
  out.validate();
  return out;
}

ExtractionConfig extraction_config(const RunConfig& config) {
  ExtractionConfig out;
  const std::string& method = config.get("policy.method");
  if (method == "closed_form") {
    out.method = ExtractionMethod::kClosedForm;
  } else if (method == "weighted_bc") {
    out.method = ExtractionMethod::kWeightedBc;
  } else if (method == "reverse_kl") {
    out.method = ExtractionMethod::kReverseKl;
  } else if (method == "bc") {
    out.method = ExtractionMethod::kPlainBc;
  } else {
    throw ValidationError(fmt::format(
        "policy.method: '{}' (expected closed_form, weighted_bc, reverse_kl or bc)",
        method));
  }
  out.steps = static_cast<int>(config.integer("policy.steps"));
  out.lr = config.number("policy.lr");
  out.seed = static_cast<std::uint64_t>(config.integer("seed"));
  return out;
}

GailConfig gail_config(const RunConfig& config) {
  GailConfig out;
  out.episodes = static_cast<int>(config.integer("gail.episodes"));
  out.horizon = static_cast<int>(config.integer("gail.horizon"));
  out.episodes_per_iter = static_cast<int>(config.integer("gail.episodes_per_iter"));
  out.disc_steps_per_iter = static_cast<int>(config.integer("gail.disc_steps"));
  out.policy_steps_per_iter = static_cast<int>(config.integer("gail.policy_steps"));
  out.lr_disc = config.number("gail.lr_disc");
  out.lr_policy = config.number("gail.lr_policy");
  out.init_std = config.number("gail.init_std");
  out.expert_batch = static_cast<int>(config.integer("gail.expert_batch"));
  out.seed = static_cast<std::uint64_t>(config.integer("seed"));
  const std::string& reward = config.get("gail.reward");
  if (reward == "neg_log_d") {
    out.reward = PolicyReward::kNegLogD;
  } else if (reward == "log_one_minus_d") {
    out.reward = PolicyReward::kLogOneMinusD;
  } else {
    throw ValidationError(fmt::format(
        "gail.reward: '{}' (expected neg_log_d or log_one_minus_d)", reward));
  }
  out.validate();
  return out;
}

OffRlConfig offrl_config(const RunConfig& config) {
  OffRlConfig out;
  out.alpha = config.number("offrl.alpha");
  out.ssp = ssp_config(config);
  out.smoothing = config.number("ssp.smoothing");
  out.discount = config.number("env.discount");
  out.validate();
  return out;
}

}  // namespace o2il::cli
