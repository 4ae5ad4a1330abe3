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

#ifndef O2IL_ORACLE_H_
#define O2IL_ORACLE_H_

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "o2il/mdp.h"
#include "o2il/ssp.h"
#include "o2il/tables.h"

namespace o2il {

struct OracleSolution {
  OccupancyMeasure rho_star;
  TabularPolicy pi_star;
  double primal_value = 0.0;
  int iterations = 0;
};

struct OracleOptions {
  double alpha = 1.0;
  // Stop once an iteration improves the objective by less than this.
  double tolerance = 1e-13;
  int max_iterations = 20000;
};

// E_rho[R] - alpha KL(rho || rho_o) for a given occupancy.
double primal_objective(const Table& rho, const Table& reward, const Table& rho_o,
                        double alpha);
double primal_objective(const TabularMdp& mdp, const Table& reward,
                        const Table& rho_o, double alpha,
                        const TabularPolicy& policy);

// Maximizes the primal over policies. Each step evaluates the current
// occupancy exactly, forms the soft-improved policy
//   pi'(a|s) ~ rho_o(s, a) exp((R(s, a) + g E_T[V](s, a)) / alpha)
// where V is the value of R - alpha log(rho / rho_o) (differential values
// when undiscounted), and line-searches the geometric path pi^(1-t) pi'^t.
OracleSolution primal_policy_search(const TabularMdp& mdp, const Table& reward,
                                    const Table& rho_o,
                                    const OracleOptions& options = {});

// Same search restricted to tiny problems (at most 5 states, 3 actions).
OracleSolution primal_brute_force(const TabularMdp& mdp, const Table& reward,
                                  const Table& rho_o,
                                  const OracleOptions& options = {});

// dual_value(nu, lambda) - primal value.
double duality_gap(const OracleSolution& oracle, const SspProblem& problem,
                   const Eigen::VectorXd& nu, const SspConfig& config,
                   double lambda = 0.0);

// Random MDP with expert and union occupancies of full support.
struct Fixture {
  std::string name;
  std::uint64_t seed = 0;
  TabularMdp mdp;
  Table rho_e;
  Table rho_o;
};

struct FixtureSpec {
  int n_states = 2;
  int n_actions = 2;
  double discount = 0.9;
  std::uint64_t seed = 0;
  double expert_weight = 0.5;
};

// rho_o = w rho_e + (1 - w) rho_s where rho_e and rho_s are occupancies of
// random policies with log-normal noise on every entry (so neither is
// exactly feasible, as with counts). Redrawn until every d* = rho_e / (rho_e + rho_o) lies in
// [0.1, 0.9].
Fixture make_fixture(const FixtureSpec& spec);
// The 20 standard specs: sizes {2, 3, 5} x {2, 3}, discounts {0.9, 0.99}.
std::vector<FixtureSpec> standard_fixture_specs();

nlohmann::json fixture_to_json(const Fixture& fixture);
Fixture fixture_from_json(const nlohmann::json& j);
Fixture load_fixture(const std::string& path);
// Every *.json file of the directory, sorted by name.
std::vector<Fixture> load_fixture_dir(const std::string& dir);

// alpha * log(rho_e / rho_o); fixtures have full support on both.
Table fixture_reward(const Fixture& fixture, double alpha);

struct OracleCheck {
  std::string fixture;
  double alpha = 1.0;
  double dual_value = 0.0;
  double primal_value = 0.0;
  double gap = 0.0;
  double kkt = 0.0;
  double flow_l1 = 0.0;
  long iterations = 0;
  bool converged = false;
};

// Exact SSP solve against the primal policy search on one fixture.
OracleCheck oracle_check(const Fixture& fixture, double alpha);

}  // namespace o2il

#endif  // O2IL_ORACLE_H_
