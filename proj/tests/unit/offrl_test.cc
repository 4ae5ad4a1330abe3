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

#include "o2il/offrl.h"

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "o2il/error.h"
#include "o2il/oracle.h"
#include "test_support.h"

namespace o2il {
namespace {

Dataset gridworld_data(const TabularMdp& mdp) {
  const Dataset e = sample_trajectories(mdp, value_iteration(mdp, 1e-10), 5, 100, 1,
                                        Source::kExpert);
  const Dataset s = sample_trajectories(mdp, TabularPolicy::uniform(mdp.n_states(), 4), 200,
                                        100, 2, Source::kSupplementary);
  return merge_datasets(e, s);
}

TEST(RewardTable, MeansAndMissingRewards) {
  Dataset d;
  d.transitions = {{0, 1, 0, true, Source::kExpert, 1.0},
                   {0, 1, 0, false, Source::kExpert, 3.0},
                   {1, 0, 0, false, Source::kExpert, -1.0}};
  const Table r = reward_table_from_data(d, 2, 2);
  EXPECT_EQ(r(0, 1), 2.0);
  EXPECT_EQ(r(1, 0), -1.0);
  EXPECT_EQ(r(0, 0), 0.0);
  d.transitions.push_back({1, 1, 0, false, Source::kExpert, std::nullopt});
  EXPECT_THROW(reward_table_from_data(d, 2, 2), ValidationError);
}

TEST(SolveOfflineRl, ZeroRewardReducesToImitationSolver) {
  const TabularMdp base = random_mdp({3, 2, 0.9, 4, 0.05});
  const TabularMdp mdp = base.with_reward(Table::Zero(3, 2));
  const Dataset data =
      sample_trajectories(mdp, TabularPolicy::uniform(3, 2), 20, 20, 1, Source::kExpert);
  OffRlConfig cfg;
  const SspSolution off = solve_offline_rl(data, 3, 2, cfg, &mdp);
  const Table rho_o = empirical_distribution(data, SourceFilter::kAll, 3, 2).probs;
  const SspSolution imit = solve_ssp(SspProblem::from_mdp(mdp, rho_o, Table::Zero(3, 2)), {});
  EXPECT_EQ(off.dual.nu, imit.dual.nu);
  EXPECT_EQ(off.dual.y, imit.dual.y);
}

TEST(SolveOfflineRl, SingleStateClosedForm) {
  const double r = 0.6;
  const double g = 0.9;
  const TabularMdp mdp = oracles::one_state_mdp(Eigen::VectorXd::Constant(1, r), g);
  const Dataset data =
      sample_trajectories(mdp, TabularPolicy::uniform(1, 1), 2, 5, 0, Source::kExpert);
  const SspSolution sol = solve_offline_rl(data, 1, 1, {}, &mdp);
  EXPECT_NEAR(sol.dual.y(0, 0), 1.0, 1e-9);
  EXPECT_NEAR(sol.dual.nu(0), (r - 1.0) / (1.0 - g), 1e-7);
}

TEST(SolveOfflineRl, TwoStateGapAgainstOracle) {
  for (double alpha : {0.5, 1.0, 2.0}) {
    const Fixture f = make_fixture({2, 2, 0.9, 9, 0.5});
    const Table reward = fixture_reward(f, 1.0);
    const SspProblem p = SspProblem::from_mdp(f.mdp, f.rho_o, reward);
    SspConfig cfg;
    cfg.alpha = alpha;
    const SspSolution sol = solve_ssp(p, cfg);
    OracleOptions opt;
    opt.alpha = alpha;
    const OracleSolution oracle = primal_brute_force(f.mdp, reward, f.rho_o, opt);
    EXPECT_LE(std::abs(dual_value(p, sol.dual.nu, cfg) - oracle.primal_value), 1e-3) << alpha;
    EXPECT_LE(kkt_residual(p, sol.dual, cfg), 1e-4);
  }
}

TEST(SolveOfflineRl, UsesDataRewardsWithoutMdp) {
  const TabularMdp mdp = build_gridworld({3, 3, {2, 2}, 0.1, -0.01, 0.99});
  const Dataset data = gridworld_data(mdp);
  OffRlConfig cfg;
  cfg.smoothing = 1e-6;
  cfg.discount = 0.99;
  const SspProblem p = offline_rl_problem(data, 9, 4, cfg);
  EXPECT_LE((p.reward - reward_table_from_data(data, 9, 4)).cwiseAbs().maxCoeff(), 0.0);
  const SspSolution sol = solve_offline_rl(data, 9, 4, cfg);
  EXPECT_LE(kkt_residual(p, sol.dual, SspConfig{}), 1e-4);
}

TEST(ExtractOfflineRl, SingleStateTwoActions) {
  Eigen::VectorXd r(2);
  r << 1.0, 0.0;
  const TabularMdp mdp = oracles::one_state_mdp(r, 0.9);
  Dataset data;
  data.transitions = {{0, 0, 0, true, Source::kSupplementary, 1.0},
                      {0, 1, 0, false, Source::kSupplementary, 0.0}};
  const SspSolution sol = solve_offline_rl(data, 1, 2, {}, &mdp);
  const Table rho_o = empirical_distribution(data, SourceFilter::kAll, 1, 2).probs;
  const TabularPolicy pi = extract_offline_rl_policy(rho_o, sol.dual.y);
  const double e = std::numbers::e;
  EXPECT_NEAR(pi(0, 0), e / (e + 1.0), 1e-6);
  EXPECT_NEAR(pi(0, 1), 1.0 / (e + 1.0), 1e-6);

  ExtractionConfig ecfg;
  ecfg.steps = 20000;
  ecfg.lr = 0.05;
  const SoftmaxPolicy fit = extract_offline_rl_policy(data, sol.dual.y, SoftmaxPolicy(1, 2), ecfg);
  EXPECT_NEAR(fit.probs(0)(0), e / (e + 1.0), 1e-4);
}

TEST(ExtractOfflineRl, LargeAlphaApproachesBehaviorCloning) {
  // With rho_o an exact occupancy the weights flatten as alpha grows.
  const TabularMdp mdp = build_gridworld({3, 3, {2, 2}, 0.1, -0.01, 0.9});
  std::mt19937_64 rng(7);
  const TabularPolicy behavior(normalize_rows(oracles::random_stochastic(9, 4, rng, 0.2)));
  const Table rho_o = occupancy(mdp, behavior).rho();
  double previous = INFINITY;
  for (double alpha : {10.0, 100.0, 1e4}) {
    SspConfig cfg;
    cfg.alpha = alpha;
    const SspSolution sol = solve_ssp(SspProblem::from_mdp(mdp, rho_o, mdp.reward()), cfg);
    const double tv =
        max_row_tv(extract_offline_rl_policy(rho_o, sol.dual.y).probs(), behavior.probs());
    EXPECT_LE(tv, previous) << alpha;
    previous = tv;
  }
  EXPECT_LE(previous, 1e-3);
}

TEST(OfflineRl, GridworldReturnNearRegularizedOptimum) {
  const TabularMdp mdp = build_gridworld({});
  const Dataset data = gridworld_data(mdp);
  OffRlConfig cfg;
  cfg.smoothing = 1e-6;
  const SspProblem p = offline_rl_problem(data, 64, 4, cfg, &mdp);
  const SspSolution sol = solve_offline_rl(data, 64, 4, cfg, &mdp);
  const TabularPolicy pi = extract_offline_rl_policy(p.rho_o, sol.dual.y);
  const OracleSolution oracle = primal_policy_search(mdp, mdp.reward(), p.rho_o);
  const double got = policy_return(mdp, pi);
  const double best = policy_return(mdp, oracle.pi_star);
  EXPECT_GE(got, 0.95 * best);
  EXPECT_LE(got, 1.05 * best);
}

TEST(OfflineRl, LargerAlphaStaysCloserToData) {
  const TabularMdp mdp = build_gridworld({});
  const Dataset data = gridworld_data(mdp);
  double previous = INFINITY;
  for (double alpha : {0.5, 1.0, 2.0, 5.0}) {
    OffRlConfig cfg;
    cfg.alpha = alpha;
    cfg.smoothing = 1e-6;
    const SspProblem p = offline_rl_problem(data, 64, 4, cfg, &mdp);
    const SspSolution sol = solve_offline_rl(data, 64, 4, cfg, &mdp);
    const double kl = occupancy_divergence(mdp, extract_offline_rl_policy(p.rho_o, sol.dual.y),
                                           p.rho_o);
    EXPECT_LE(kl, previous) << alpha;
    previous = kl;
  }
}

TEST(OfflineRl, AuxiliaryRewardReproducesImitationSolve) {
  const Fixture f = make_fixture({3, 2, 0.9, 12, 0.5});
  const Table reward = fixture_reward(f, 1.0);
  const TabularMdp mdp = f.mdp.with_reward(reward);
  const Dataset data =
      sample_trajectories(mdp, TabularPolicy::uniform(3, 2), 30, 20, 5, Source::kExpert);
  OffRlConfig cfg;
  const SspSolution off = solve_offline_rl(data, 3, 2, cfg, &mdp);
  const Table rho_o = empirical_distribution(data, SourceFilter::kAll, 3, 2).probs;
  const SspSolution imit = solve_ssp(SspProblem::from_mdp(f.mdp, rho_o, reward), {});
  EXPECT_EQ(off.dual.nu, imit.dual.nu);
  EXPECT_EQ(off.dual.y, imit.dual.y);
}

TEST(OffRlConfig, Validation) {
  OffRlConfig cfg;
  cfg.alpha = 0.0;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

}  // namespace
}  // namespace o2il
