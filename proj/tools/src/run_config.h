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

#ifndef O2IL_TOOLS_RUN_CONFIG_H_
#define O2IL_TOOLS_RUN_CONFIG_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "o2il/finetune.h"
#include "o2il/mdp.h"
#include "o2il/offrl.h"
#include "o2il/policy.h"
#include "o2il/reward.h"
#include "o2il/ssp.h"

namespace o2il::cli {

// Flat key=value settings. Every key has a default; unknown keys are errors.
class RunConfig {
 public:
  RunConfig();

  void set(const std::string& key, const std::string& value);
  // "key=value"
  void assign(const std::string& assignment);
  // One assignment per line; '#' starts a comment.
  void load_file(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  double number(const std::string& key) const;
  long integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<int> integers(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  std::string snapshot() const;
  void write_snapshot(const std::string& path) const;

 private:
  std::map<std::string, std::string> values_;
};

GridworldSpec gridworld_spec(const RunConfig& config);
ClipBounds reward_clip(const RunConfig& config);
SspConfig ssp_config(const RunConfig& config);
ExtractionConfig extraction_config(const RunConfig& config);
GailConfig gail_config(const RunConfig& config);
OffRlConfig offrl_config(const RunConfig& config);

}  // namespace o2il::cli

#endif  // O2IL_TOOLS_RUN_CONFIG_H_
