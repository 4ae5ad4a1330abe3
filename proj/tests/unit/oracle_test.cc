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

#include "o2il/oracle.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "o2il/error.h"
#include "o2il/ssp.h"
#include "test_support.h"

namespace o2il {
namespace {

TEST(PrimalOracle, ForcedFeasiblePoint) {
  Eigen::VectorXd r(1);
  r << 0.42;
  const TabularMdp mdp = oracles::one_state_mdp(r, 0.9);
  const OracleSolution sol = primal_brute_force(mdp, mdp.reward(), Table::Ones(1, 1));
  EXPECT_NEAR(sol.rho_star(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(sol.primal_value, 0.42, 1e-12);
}

TEST(PrimalOracle, SingleStateTwoActions) {
  Eigen::VectorXd r(2);
  r << std::log(2.0), 0.0;
  const TabularMdp mdp = oracles::one_state_mdp(r, 0.9);
  const OracleSolution sol = primal_brute_force(mdp, mdp.reward(), Table::Constant(1, 2, 0.5));
  EXPECT_NEAR(sol.rho_star(0, 0), 2.0 / 3.0, 1e-6);
  EXPECT_NEAR(sol.rho_star(0, 1), 1.0 / 3.0, 1e-6);
  EXPECT_NEAR(sol.primal_value, std::log(1.5), 1e-6);
}

TEST(PrimalOracle, AgreesWithExponentiatedGradient) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const Fixture f = make_fixture({2, 2, 0.9, 50 + seed, 0.5});
    const Table reward = fixture_reward(f, 1.0);
    const OracleSolution sol = primal_brute_force(f.mdp, reward, f.rho_o);
    const double eg = oracles::eg_primal_oracle(f.mdp, reward, f.rho_o, 1.0, 3000, 2.0);
    EXPECT_NEAR(sol.primal_value, eg, 1e-5) << seed;
    EXPECT_NEAR(sol.primal_value,
                oracles::hand_primal(f.mdp, reward, f.rho_o, 1.0, sol.pi_star.probs()), 1e-9);
  }
}

TEST(PrimalOracle, SizeGuard) {
  const TabularMdp mdp = random_mdp({6, 2, 0.9, 1, 0.05});
  EXPECT_THROW(primal_brute_force(mdp, Table::Zero(6, 2), Table::Constant(6, 2, 1.0 / 12)),
               ValidationError);
  const TabularMdp wide = random_mdp({2, 4, 0.9, 1, 0.05});
  EXPECT_THROW(primal_brute_force(wide, Table::Zero(2, 4), Table::Constant(2, 4, 0.125)),
               ValidationError);
}

TEST(PrimalOracle, OccupancyIsFeasible) {
  for (const Fixture& f : load_fixture_dir(O2IL_FIXTURE_DIR)) {
    const OracleSolution sol = primal_brute_force(f.mdp, fixture_reward(f, 1.0), f.rho_o);
    EXPECT_LE(oracles::hand_flow_residual(f.mdp, sol.rho_star.rho()).cwiseAbs().maxCoeff(),
              1e-8)
        << f.name;
    EXPECT_TRUE(std::isfinite(sol.primal_value));
  }
}

TEST(DualityGap, SingleStateClosedForm) {
  const double r = 0.3;
  const double g = 0.9;
  const TabularMdp mdp = oracles::one_state_mdp(Eigen::VectorXd::Constant(1, r), g);
  const OracleSolution sol = primal_brute_force(mdp, mdp.reward(), Table::Ones(1, 1));
  const SspProblem p = SspProblem::from_mdp(mdp, Table::Ones(1, 1), mdp.reward());
  EXPECT_NEAR(duality_gap(sol, p, Eigen::VectorXd::Constant(1, (r - 1.0) / (1.0 - g)), {}),
              0.0, 1e-12);
}

TEST(DualityGap, StrongAndWeakDualityOnFixtures) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 2.0);
  for (const Fixture& f : load_fixture_dir(O2IL_FIXTURE_DIR)) {
    const Table reward = fixture_reward(f, 1.0);
    const SspProblem p = SspProblem::from_mdp(f.mdp, f.rho_o, reward);
    const OracleSolution oracle = primal_brute_force(f.mdp, reward, f.rho_o);
    const SspSolution sol = solve_ssp(p, {});
    EXPECT_LE(std::abs(duality_gap(oracle, p, sol.dual.nu, {})), 1e-3) << f.name;
    EXPECT_GT(duality_gap(oracle, p, Eigen::VectorXd::Zero(p.n_states()), {}), 0.0) << f.name;
    for (int k = 0; k < 50; ++k) {
      Eigen::VectorXd nu(p.n_states());
      for (int s = 0; s < p.n_states(); ++s) nu(s) = n(rng);
      EXPECT_GE(duality_gap(oracle, p, nu, {}), -1e-9) << f.name;
    }

    // Oracle occupancy against the dual optimum.
    const Table delta = oracles::hand_delta(f.mdp, reward, sol.dual.nu, f.mdp.discount());
    const Table ratio = oracle.rho_star.rho().array() / f.rho_o.array();
    EXPECT_LE((ratio.array() - (delta.array() - 1.0).exp()).abs().maxCoeff(), 1e-3) << f.name;
    const TabularPolicy pi_ssp = TabularPolicy(normalize_rows(f.rho_o.cwiseProduct(sol.dual.y)));
    EXPECT_LE(max_row_tv(pi_ssp.probs(), oracle.pi_star.probs()), 5e-2) << f.name;
  }
}

TEST(Fixtures, ShippedFilesMatchGenerator) {
  const std::vector<Fixture> shipped = load_fixture_dir(O2IL_FIXTURE_DIR);
  const std::vector<FixtureSpec> specs = standard_fixture_specs();
  ASSERT_EQ(shipped.size(), 20u);
  ASSERT_EQ(specs.size(), 20u);
  int matched = 0;
  for (const FixtureSpec& spec : specs) {
    const Fixture f = make_fixture(spec);
    EXPECT_LE(f.mdp.n_states(), 5);
    EXPECT_LE(f.mdp.n_actions(), 3);
    for (const Fixture& g : shipped) {
      if (g.name != f.name) continue;
      ++matched;
      EXPECT_LE((g.rho_o - f.rho_o).cwiseAbs().maxCoeff(), 1e-15);
      EXPECT_LE((g.rho_e - f.rho_e).cwiseAbs().maxCoeff(), 1e-15);
      EXPECT_LE((g.mdp.transition() - f.mdp.transition()).cwiseAbs().maxCoeff(), 1e-15);
    }
  }
  EXPECT_EQ(matched, 20);
}

TEST(Fixtures, JsonRoundTrip) {
  const Fixture f = make_fixture({3, 2, 0.99, 77, 0.5});
  const Fixture back = fixture_from_json(fixture_to_json(f));
  EXPECT_EQ(back.name, f.name);
  EXPECT_EQ(back.rho_e, f.rho_e);
  EXPECT_EQ(back.rho_o, f.rho_o);
  EXPECT_EQ(back.mdp.transition(), f.mdp.transition());
}

TEST(OracleCheck, ReportsSmallGap) {
  const Fixture f = make_fixture({3, 3, 0.9, 5, 0.5});
  for (double alpha : {0.5, 1.0, 2.0}) {
    const OracleCheck c = oracle_check(f, alpha);
    EXPECT_TRUE(c.converged);
    EXPECT_LE(std::abs(c.gap), 1e-3);
    EXPECT_LE(c.kkt, 1e-4);
    EXPECT_LE(c.flow_l1, 1e-3);
  }
}

}  // namespace
}  // namespace o2il
