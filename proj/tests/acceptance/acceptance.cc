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

// Acceptance suite. Prints one [PASS] or [FAIL] line per criterion and
// writes the same lines to <out>/acceptance.txt.
//
// usage: o2il_acceptance <fixture dir> <out dir>
//
// The exit status reports whether every criterion could be evaluated, not
// whether it passed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cli.h"
#include "o2il/data.h"
#include "o2il/finetune.h"
#include "o2il/mdp.h"
#include "o2il/nn.h"
#include "o2il/offrl.h"
#include "o2il/oracle.h"
#include "o2il/policy.h"
#include "o2il/reward.h"
#include "o2il/ssp.h"
#include "o2il/stitch.h"
#include "run_config.h"
#include "test_support.h"

namespace o2il {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::Map<Eigen::VectorXd> flat(Table& t) { return {t.data(), t.size()}; }
Eigen::Map<const Eigen::VectorXd> flat(const Table& t) { return {t.data(), t.size()}; }

std::vector<Fixture> g_fixtures;
fs::path g_out;

// ------------------------------------------------------------ 1. duality

Outcome strong_duality() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 2.0);
  double worst_gap = 0.0;
  double worst_weak = 0.0;
  for (const Fixture& f : g_fixtures) {
    const Table reward = fixture_reward(f, 1.0);
    const SspProblem p = SspProblem::from_mdp(f.mdp, f.rho_o, reward);
    const OracleSolution oracle = primal_brute_force(f.mdp, reward, f.rho_o);
    const SspSolution sol = solve_ssp(p, {});
    const double dual =
        oracles::hand_dual(f.mdp, reward, f.rho_o, sol.dual.nu, 1.0, f.mdp.discount());
    worst_gap = std::max(worst_gap, std::abs(dual - oracle.primal_value));
    for (int k = 0; k < 50; ++k) {
      Eigen::VectorXd nu(p.n_states());
      for (int s = 0; s < p.n_states(); ++s) nu(s) = n(rng);
      const double d = oracles::hand_dual(f.mdp, reward, f.rho_o, nu, 1.0, f.mdp.discount());
      worst_weak = std::max(worst_weak, oracle.primal_value - d);
    }
  }
  const double elapsed = seconds_since(t0);
  return {worst_gap <= 1e-3 && worst_weak <= 1e-9 && elapsed <= 120.0,
          fmt::format("max |gap| {:.2e}, max weak violation {:.2e}, {} fixtures in {:.1f} s",
                      worst_gap, std::max(worst_weak, 0.0), g_fixtures.size(), elapsed)};
}

// ------------------------------------------------------------ 2. KKT

Outcome kkt_identity() {
  double worst = 0.0;
  for (const Fixture& f : g_fixtures) {
    for (double alpha : {0.5, 1.0, 2.0}) {
      const Table reward = fixture_reward(f, alpha);
      SspConfig cfg;
      cfg.alpha = alpha;
      const SspSolution sol = solve_ssp(SspProblem::from_mdp(f.mdp, f.rho_o, reward), cfg);
      const Table delta = oracles::hand_delta(f.mdp, reward, sol.dual.nu, f.mdp.discount());
      const Table y_star = (delta.array() / alpha - 1.0).exp() / alpha;
      worst = std::max(worst, (sol.dual.y - y_star).cwiseAbs().maxCoeff());
    }
  }
  return {worst <= 1e-4, fmt::format("max |y - exp(delta/alpha - 1)/alpha| {:.2e}", worst)};
}

// ------------------------------------------------------------ 3. flow

Outcome flow_feasibility() {
  double worst_flow = 0.0;
  double worst_mass = 0.0;
  double worst_undiscounted_flow = 0.0;
  for (const Fixture& f : g_fixtures) {
    for (double alpha : {0.5, 1.0, 2.0}) {
      const Table reward = fixture_reward(f, alpha);
      const SspProblem p = SspProblem::from_mdp(f.mdp, f.rho_o, reward);
      SspConfig cfg;
      cfg.alpha = alpha;
      const SspSolution sol = solve_ssp(p, cfg);
      const Table rho = f.rho_o.cwiseProduct(sol.dual.y) * alpha;
      worst_flow =
          std::max(worst_flow, oracles::hand_flow_residual(f.mdp, rho).cwiseAbs().sum());

      const SspSolution und = solve_undiscounted(p, cfg);
      const Table rho_u = f.rho_o.cwiseProduct(und.dual.y) * alpha;
      worst_mass = std::max(worst_mass, std::abs(rho_u.sum() - 1.0));
      worst_undiscounted_flow = std::max(
          worst_undiscounted_flow,
          oracles::hand_flow_residual(f.mdp.with_discount(1.0), rho_u).cwiseAbs().sum());
    }
  }
  return {worst_flow <= 1e-3 && worst_mass <= 1e-3 && worst_undiscounted_flow <= 1e-3,
          fmt::format("max l1 flow {:.2e}; undiscounted max |sum - 1| {:.2e}, flow {:.2e}",
                      worst_flow, worst_mass, worst_undiscounted_flow)};
}

// ------------------------------------------------------------ 4. extraction

Outcome extraction_equivalence() {
  double worst_tv = 0.0;
  double worst_primal = 0.0;
  for (const Fixture& f : g_fixtures) {
    const int S = f.mdp.n_states();
    const int A = f.mdp.n_actions();
    // Union data whose counts realize rho_o up to rounding.
    Dataset data;
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const long c = std::max(1L, std::lround(f.rho_o(s, a) * 20000.0));
        for (long k = 0; k < c; ++k) {
          data.transitions.push_back({s, a, s, true, Source::kSupplementary, std::nullopt});
        }
      }
    }
    const EmpiricalDistribution rho_o = empirical_distribution(data, SourceFilter::kAll, S, A);
    const DensityDiscriminator d = fit_discriminator_closed_form(
        {f.rho_e, Mask::Constant(S, A, true)}, rho_o, ClipBounds{0.0, 1.0});
    const Table reward = auxiliary_reward(d, S, A).values;
    const SspSolution sol = solve_ssp(SspProblem::from_mdp(f.mdp, rho_o.probs, reward), {});

    const TabularPolicy closed = extract_policy_closed_form(rho_o.probs, sol.dual.y);
    const TabularPolicy forward = extract_policy_weighted_bc(data, sol.dual.y);
    const TabularPolicy reverse = extract_policy_reverse_kl(
        reverse_kl_target(f.rho_e, sol.dual.y, d), std::vector<bool>(S, true));
    worst_tv = std::max({worst_tv, max_row_tv(closed.probs(), forward.probs()),
                         max_row_tv(closed.probs(), reverse.probs())});

    const OracleSolution oracle = primal_brute_force(f.mdp, reward, rho_o.probs);
    const double got = oracles::hand_primal(f.mdp, reward, rho_o.probs, 1.0, closed.probs());
    worst_primal = std::max(worst_primal, std::abs(got - oracle.primal_value));
  }
  return {worst_tv <= 1e-6 && worst_primal <= 1e-2,
          fmt::format("max per-state TV {:.2e}, max primal shortfall {:.2e}", worst_tv,
                      worst_primal)};
}

// ------------------------------------------------------------ gridworld run

// gen-data, pretrain and stitch through the command-line entry point.
struct Pipeline {
  bool ok = false;
  std::string error;
  cli::RunConfig config;
  TabularMdp mdp = build_gridworld({});
  Dataset expert;
  TabularPolicy pretrained = TabularPolicy::uniform(1, 1);
  std::optional<StitchedDiscriminator> stitched;
  double expert_return = 0.0;
  double stitch_seconds = 0.0;
};

Pipeline& pipeline() {
  static Pipeline p = [] {
    Pipeline r;
    const std::string cfg = std::string(O2IL_CONFIG_DIR) + "/gridworld.cfg";
    const fs::path root = g_out / "gridworld";
    const std::string gen = (root / "gen").string();
    const std::string pre = (root / "pretrain").string();
    const std::string sti = (root / "stitch").string();
    auto call = [](std::vector<std::string> args) {
      args.insert(args.begin(), "o2il");
      return cli::command_dispatch(args);
    };
    if (call({"gen-data", "--config", cfg, "--out", gen}) != 0 ||
        call({"pretrain", "--config", cfg, "--mdp", gen + "/mdp.json", "--data",
              gen + "/data.jsonl", "--out", pre}) != 0) {
      r.error = "gen-data or pretrain failed";
      return r;
    }
    // The stitch stage sees only the pretraining artifacts.
    const fs::path isolated = root / "stitch_inputs";
    fs::create_directories(isolated);
    fs::copy_file(pre + "/discriminator.json", isolated / "discriminator.json",
                  fs::copy_options::overwrite_existing);
    fs::copy_file(pre + "/dual.json", isolated / "dual.json",
                  fs::copy_options::overwrite_existing);
    const auto t0 = Clock::now();
    const int rc = call({"stitch", "--config", cfg, "--discriminator",
                         (isolated / "discriminator.json").string(), "--dual",
                         (isolated / "dual.json").string(), "--out", sti});
    r.stitch_seconds = seconds_since(t0);
    if (rc != 0) {
      r.error = "stitch failed";
      return r;
    }
    r.config.load_file(cfg);
    r.mdp = load_mdp(gen + "/mdp.json");
    const Dataset all = read_jsonl(gen + "/data.jsonl");
    for (const auto& t : all.transitions) {
      if (t.source == Source::kExpert) r.expert.transitions.push_back(t);
    }
    r.pretrained = policy_from_json(read_json_file(pre + "/policy.json"));
    r.stitched = StitchedDiscriminator::from_json(read_json_file(sti + "/stitched.json"));
    // Normalized return (1 - g) mu.V of an independently computed optimal policy.
    r.expert_return = (1.0 - r.mdp.discount()) *
                      oracles::evaluate_policy(r.mdp, oracles::policy_iteration(r.mdp).probs(),
                                               r.mdp.reward())
                          .dot(r.mdp.initial());
    r.ok = true;
    return r;
  }();
  return p;
}

// ------------------------------------------------------------ 5. stitching

Outcome stitching_identity() {
  double worst = 0.0;
  for (const Fixture& f : g_fixtures) {
    const int S = f.mdp.n_states();
    const int A = f.mdp.n_actions();
    for (double alpha : {0.5, 1.0, 2.0}) {
      SspConfig cfg;
      cfg.alpha = alpha;
      const SspSolution sol =
          solve_ssp(SspProblem::from_mdp(f.mdp, f.rho_o, fixture_reward(f, alpha)), cfg);
      const DensityDiscriminator d = fit_discriminator_closed_form(
          {f.rho_e, Mask::Constant(S, A, true)}, {f.rho_o, Mask::Constant(S, A, true)},
          ClipBounds{0.0, 1.0});
      const Table d0 = StitchedDiscriminator::tabular(d, sol.dual.y, alpha).table(S, A);
      const Table rho_star = f.rho_o.cwiseProduct(sol.dual.y) * alpha;
      const Table expected = rho_star.array() / (rho_star + f.rho_e).array();
      worst = std::max(worst, (d0 - expected).cwiseAbs().maxCoeff());
    }
  }
  Pipeline& p = pipeline();
  if (!p.ok) return {false, p.error};
  return {worst <= 1e-10 && p.stitch_seconds < 1.0,
          fmt::format("max |D0 - rho*/(rho*+rho_e)| {:.2e}; stitch command {:.3f} s from "
                      "discriminator and dual files only",
                      worst, p.stitch_seconds)};
}

// ------------------------------------------------------------ 6. objectives

Outcome objective_equivalence() {
  double worst = 0.0;
  int cases = 0;
  for (const Fixture& f : g_fixtures) {
    const Table reward = fixture_reward(f, 1.0);
    std::mt19937_64 rng(f.seed + 17);
    for (int k = 0; k < 10; ++k) {
      const TabularPolicy pi = oracles::random_policy(f.mdp.n_states(), f.mdp.n_actions(), rng);
      const Table rho = oracles::truncated_occupancy(f.mdp, pi, 20000);
      const double imitation = oracles::hand_kl(rho, f.rho_e);
      const double auxiliary = (rho.array() * reward.array()).sum() - oracles::hand_kl(rho, f.rho_o);
      // Library path.
      const double lib = occupancy_divergence(f.mdp, pi, f.rho_e);
      const double lib_aux = (occupancy(f.mdp, pi).rho().array() * reward.array()).sum() -
                             occupancy_divergence(f.mdp, pi, f.rho_o);
      worst = std::max({worst, std::abs(imitation + auxiliary), std::abs(lib + lib_aux),
                        std::abs(lib - imitation)});
      ++cases;
    }
  }
  return {worst < 1e-8, fmt::format("{} policies, max |KL(rho||rho_e) + (E[R] - KL(rho||rho_o))| "
                                    "{:.2e}",
                                    cases, worst)};
}

// ------------------------------------------------------------ 7. convexity

Outcome convexity() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 2.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int ok = 0;
  const int total = 1000;
  for (int k = 0; k < total; ++k) {
    const Fixture& f = g_fixtures[static_cast<std::size_t>(k) % g_fixtures.size()];
    const Table reward = fixture_reward(f, 1.0);
    const int S = f.mdp.n_states();
    Eigen::VectorXd a(S), b(S);
    for (int s = 0; s < S; ++s) {
      a(s) = n(rng);
      b(s) = n(rng);
    }
    const double t = u(rng);
    const double g = f.mdp.discount();
    auto L = [&](const Eigen::VectorXd& nu) {
      return oracles::hand_dual(f.mdp, reward, f.rho_o, nu, 1.0, g);
    };
    const double lhs = L(t * a + (1.0 - t) * b);
    const double rhs = t * L(a) + (1.0 - t) * L(b);
    if (lhs <= rhs + 1e-12 * std::max(1.0, std::abs(rhs))) ++ok;
  }
  return {ok == total, fmt::format("{}/{} triples satisfy L(t a + (1-t) b) <= t L(a) + (1-t) L(b)",
                                   ok, total)};
}

// ------------------------------------------------------------ 8. gradients

struct FdResult {
  std::string path;
  double worst;
  int checked;
};

Outcome gradient_integrity() {
  std::vector<FdResult> results;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  auto check = [&](const std::string& name, const std::function<double(const Eigen::VectorXd&)>& f,
                   const Eigen::VectorXd& x, const Eigen::VectorXd& g, std::uint64_t seed) {
    int checked = 0;
    const double worst = oracles::finite_difference_check(f, x, g, 150, seed, 1e-5, &checked);
    results.push_back({name, worst, checked});
  };

  {  // GAIL discriminator tables.
    const GailDiscriminator d = GailDiscriminator::random(32, 4, 1.5, {}, 0.5, 9);
    std::uniform_int_distribution<int> us(0, 31), ua(0, 3);
    std::vector<Pair> pp, ep;
    for (int i = 0; i < 400; ++i) pp.push_back({us(rng), ua(rng)});
    for (int i = 0; i < 200; ++i) ep.push_back({us(rng), ua(rng)});
    const auto grad = gail_discriminator_gradient(d, pp, ep).second;
    check("gail discriminator",
          [&](const Eigen::VectorXd& x) {
            GailDiscriminator c = d;
            c.set_params(x);
            return gail_discriminator_gradient(c, pp, ep).first;
          },
          d.params(), grad, 1);
  }
  {  // Logistic density discriminator network.
    Mlp net({6, 16, 1}, 2);
    Eigen::MatrixXd xe(6, 20), xo(6, 40);
    for (Eigen::Index i = 0; i < xe.size(); ++i) xe.data()[i] = n(rng);
    for (Eigen::Index i = 0; i < xo.size(); ++i) xo.data()[i] = n(rng);
    const auto grad = logistic_loss_and_gradient(net, xe, xo).second;
    check("logistic discriminator",
          [&](const Eigen::VectorXd& x) {
            Mlp m = net;
            m.params() = x;
            return logistic_loss_and_gradient(m, xe, xo).first;
          },
          net.params(), grad, 2);
  }
  {  // Tabular nu and y.
    const TabularMdp mdp = random_mdp({120, 3, 0.9, 3, 0.05});
    Table rho_o = oracles::random_stochastic(120, 3, rng, 0.05);
    rho_o /= rho_o.sum();
    Table reward(120, 3);
    for (Eigen::Index i = 0; i < reward.size(); ++i) reward.data()[i] = n(rng);
    const SspProblem p = SspProblem::from_mdp(mdp, rho_o, reward);
    for (bool undiscounted : {false, true}) {
      SspConfig cfg;
      cfg.alpha = 1.3;
      cfg.undiscounted = undiscounted;
      DualVariables dual{Eigen::VectorXd(120), oracles::random_stochastic(120, 3, rng, 0.3), {}};
      for (int s = 0; s < 120; ++s) dual.nu(s) = n(rng);
      if (undiscounted) dual.lambda = 0.2;
      const SspGradients g = ssp_gradients(p, dual, cfg);
      const std::string tag = undiscounted ? " (undiscounted)" : "";
      check("ssp nu" + tag,
            [&](const Eigen::VectorXd& x) {
              DualVariables d = dual;
              d.nu = x;
              return ssp_objective(p, d, cfg);
            },
            dual.nu, g.nu, 3);
      check("ssp y" + tag,
            [&](const Eigen::VectorXd& x) {
              DualVariables d = dual;
              flat(d.y) = x;
              return ssp_objective(p, d, cfg);
            },
            flat(dual.y), flat(g.y), 4);
    }
  }
  {  // Neural nu and log y.
    const FeatureMap features = FeatureMap::continuous(2, 1);
    std::vector<Transition> batch;
    std::vector<Point> starts;
    for (int i = 0; i < 12; ++i) {
      batch.push_back({std::vector<double>{n(rng), n(rng)}, std::vector<double>{n(rng)},
                       std::vector<double>{n(rng), n(rng)}, i % 4 == 0, Source::kExpert,
                       std::nullopt});
      if (i % 4 == 0) starts.push_back(batch.back().state);
    }
    const PairReward reward = [](const Point& s, const Point& a) {
      return 0.3 * std::get<std::vector<double>>(s)[0] - 0.2 * std::get<std::vector<double>>(a)[0];
    };
    const ParametricDual dual = make_parametric_dual(features, {8, 8}, 5);
    SspConfig cfg;
    cfg.alpha = 1.7;
    const ParametricGradients g = parametric_gradients(dual, batch, starts, reward, 0.9, cfg);
    check("parametric nu",
          [&](const Eigen::VectorXd& x) {
            ParametricDual d = dual;
            d.nu_net.params() = x;
            return parametric_gradients(d, batch, starts, reward, 0.9, cfg).objective;
          },
          dual.nu_net.params(), g.nu, 5);
    check("parametric log y",
          [&](const Eigen::VectorXd& x) {
            ParametricDual d = dual;
            d.log_y_net.params() = x;
            return parametric_gradients(d, batch, starts, reward, 0.9, cfg).objective;
          },
          dual.log_y_net.params(), g.log_y, 6);
  }
  {  // Softmax policy heads.
    SoftmaxPolicy pi(30, 4);
    for (Eigen::Index i = 0; i < pi.logits().size(); ++i) pi.logits().data()[i] = n(rng);
    const Table w = oracles::random_stochastic(30, 4, rng) * 5.0;
    const Table g_bc = weighted_log_likelihood(pi, w).second;
    check("softmax weighted BC",
          [&](const Eigen::VectorXd& x) {
            SoftmaxPolicy q = pi;
            flat(q.logits()) = x;
            return weighted_log_likelihood(q, w).first;
          },
          flat(pi.logits()), flat(g_bc), 7);
    const Table target = oracles::random_stochastic(30, 4, rng, 0.1);
    Eigen::VectorXd sw = Eigen::VectorXd::Zero(30);
    for (int s = 0; s < 30; ++s) sw(s) = std::abs(n(rng));
    const Table g_kl = reverse_kl_loss(pi, target, sw).second;
    check("softmax reverse KL",
          [&](const Eigen::VectorXd& x) {
            SoftmaxPolicy q = pi;
            flat(q.logits()) = x;
            return reverse_kl_loss(q, target, sw).first;
          },
          flat(pi.logits()), flat(g_kl), 8);

    const TabularMdp grid = build_gridworld({6, 6, {5, 5}, 0.1, -0.01, 0.99});
    SoftmaxPolicy gp(36, 4);
    for (Eigen::Index i = 0; i < gp.logits().size(); ++i) gp.logits().data()[i] = n(rng);
    const auto episodes = rollout(grid, gp, 6, 30, rng);
    const GailDiscriminator d = GailDiscriminator::random(36, 4, 1.0, {}, 0.5, 10);
    const auto adv = policy_advantages(episodes, d, 0.99, PolicyReward::kNegLogD);
    const Table g_pg = gail_policy_surrogate(gp, episodes, adv).second;
    check("softmax GAIL surrogate",
          [&](const Eigen::VectorXd& x) {
            SoftmaxPolicy q = gp;
            flat(q.logits()) = x;
            return gail_policy_surrogate(q, episodes, adv).first;
          },
          flat(gp.logits()), flat(g_pg), 9);
  }
  {  // Gaussian policy head.
    GaussianPolicy pi(2, 1, {8, 8}, 11);
    std::vector<Eigen::VectorXd> states, actions, noise;
    std::vector<double> weights;
    for (int i = 0; i < 6; ++i) {
      Eigen::VectorXd s(2), a(1), e(1);
      s << n(rng), n(rng);
      a << std::tanh(n(rng));
      e << n(rng);
      states.push_back(s);
      actions.push_back(a);
      noise.push_back(e);
      weights.push_back(0.5 + i);
    }
    const auto g_ll = gaussian_log_likelihood(pi, states, actions, weights).second;
    check("gaussian likelihood",
          [&](const Eigen::VectorXd& x) {
            GaussianPolicy p = pi;
            p.net().params() = x;
            return gaussian_log_likelihood(p, states, actions, weights).first;
          },
          pi.net().params(), g_ll, 12);
    const LogTarget log_q = [](const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                               Eigen::VectorXd* g) {
      const double c = 0.7 * s(0) - 0.2;
      if (g) *g = Eigen::VectorXd::Constant(1, -2.0 * (a(0) - c));
      return -(a(0) - c) * (a(0) - c);
    };
    const auto g_kl = reverse_kl_gaussian_loss(pi, states, noise, log_q).second;
    check("gaussian reverse KL",
          [&](const Eigen::VectorXd& x) {
            GaussianPolicy p = pi;
            p.net().params() = x;
            return reverse_kl_gaussian_loss(p, states, noise, log_q).first;
          },
          pi.net().params(), g_kl, 13);
  }

  bool pass = true;
  double worst = 0.0;
  int fewest = 1 << 30;
  std::string failing;
  for (const auto& r : results) {
    worst = std::max(worst, r.worst);
    fewest = std::min(fewest, r.checked);
    if (r.worst > 1e-4 || r.checked < 100) {
      pass = false;
      failing += fmt::format(" {} ({:.1e}, {} params);", r.path, r.worst, r.checked);
    }
  }
  return {pass, fmt::format("{} paths, worst relative error {:.2e}, at least {} params each{}",
                            results.size(), worst, fewest,
                            failing.empty() ? "" : ";" + failing)};
}

// ------------------------------------------------------------ 9 and 10

const std::vector<std::uint64_t> kSeeds = {1, 2, 3, 4, 5};

struct OnlineRuns {
  bool ok = false;
  std::string error;
  UnlearningReport report;
  std::vector<LearningCurve> scratch;
  double seconds = 0.0;
};

OnlineRuns& online_runs() {
  static OnlineRuns runs = [] {
    OnlineRuns r;
    Pipeline& p = pipeline();
    if (!p.ok) {
      r.error = p.error;
      return r;
    }
    const auto t0 = Clock::now();
    const GailConfig gail = cli::gail_config(p.config);
    r.report = unlearning_experiment(p.mdp, p.pretrained, *p.stitched, p.expert, kSeeds, gail);
    r.seconds = seconds_since(t0);
    const int S = p.mdp.n_states();
    const int A = p.mdp.n_actions();
    const double lo = p.config.number("stitch.clip_lo");
    for (std::uint64_t seed : kSeeds) {
      GailConfig g = gail;
      g.seed = seed;
      g.disc_init = DiscInit::kRandom;
      const GailDiscriminator d = GailDiscriminator::random(
          S, A, p.config.number("ssp.alpha"), {lo, 1.0 - lo}, g.init_std, seed ^ 0xd15cULL);
      r.scratch.push_back(run_gail(p.mdp, SoftmaxPolicy(S, A), d, p.expert, g).curve);
    }
    r.ok = true;
    return r;
  }();
  return runs;
}

Outcome unlearning_mitigation() {
  OnlineRuns& r = online_runs();
  if (!r.ok) return {false, r.error};
  std::string per_seed;
  for (const auto& s : r.report.seeds) {
    per_seed += fmt::format(" {:.3f}/{:.3f}", s.retention_stitched, s.retention_random);
  }
  const int wins = r.report.stitched_wins();
  const double min_ret = r.report.min_stitched_retention();
  return {wins >= 4 && min_ret >= 0.9 && r.seconds <= 600.0,
          fmt::format("stitched >= random in {}/5 seeds, min stitched retention {:.3f} "
                      "(stitched/random:{}), {:.0f} s",
                      wins, min_ret, per_seed, r.seconds)};
}

Outcome end_to_end() {
  Pipeline& p = pipeline();
  OnlineRuns& r = online_runs();
  if (!r.ok) return {false, r.error};
  const double offline = policy_return(p.mdp, p.pretrained) / p.expert_return;
  const double level = 0.95 * p.expert_return;
  int fast = 0;
  int slow_scratch = 0;
  std::string stitched_eps;
  std::string scratch_eps;
  auto show = [](const std::optional<long>& e) { return e ? std::to_string(*e) : "never"; };
  for (std::size_t i = 0; i < kSeeds.size(); ++i) {
    const auto a = r.report.seeds[i].stitched.first_reaching("return", level);
    const auto b = r.scratch[i].first_reaching("return", level);
    fast += a && *a <= 50;
    slow_scratch += !b || *b > 100;
    stitched_eps += " " + show(a);
    scratch_eps += " " + show(b);
  }
  return {offline >= 0.8 && fast >= 4 && slow_scratch >= 4,
          fmt::format("offline {:.1f}% of expert; episodes to 95%: stitched [{} ] "
                      "({}/5 within 50), scratch [{} ] ({}/5 beyond 100)",
                      100.0 * offline, stitched_eps, fast, scratch_eps, slow_scratch)};
}

// ------------------------------------------------------------ 11. offline RL

Outcome offline_rl() {
  // Single state, rewards (1, 0), uniform data.
  Eigen::VectorXd r(2);
  r << 1.0, 0.0;
  const TabularMdp one = oracles::one_state_mdp(r, 0.9);
  Dataset tiny;
  tiny.transitions = {{0, 0, 0, true, Source::kSupplementary, 1.0},
                      {0, 1, 0, false, Source::kSupplementary, 0.0}};
  const Table rho_tiny = empirical_distribution(tiny, SourceFilter::kAll, 1, 2).probs;
  const TabularPolicy pi1 =
      extract_offline_rl_policy(rho_tiny, solve_offline_rl(tiny, 1, 2, {}, &one).dual.y);
  const double e = std::numbers::e;
  const double single_err =
      std::max(std::abs(pi1(0, 0) - e / (e + 1.0)), std::abs(pi1(0, 1) - 1.0 / (e + 1.0)));

  Pipeline& p = pipeline();
  if (!p.ok) return {false, p.error};
  const Dataset data = read_jsonl((g_out / "gridworld/gen/data.jsonl").string());
  const int S = p.mdp.n_states();
  const int A = p.mdp.n_actions();
  OffRlConfig cfg;
  cfg.smoothing = p.config.number("ssp.smoothing");
  const SspProblem prob = offline_rl_problem(data, S, A, cfg, &p.mdp);
  const TabularPolicy pi =
      extract_offline_rl_policy(prob.rho_o, solve_offline_rl(data, S, A, cfg, &p.mdp).dual.y);
  const OracleSolution oracle = primal_policy_search(p.mdp, p.mdp.reward(), prob.rho_o);
  const double got = policy_return(p.mdp, pi);
  const double best = policy_return(p.mdp, oracle.pi_star);
  const double rel = std::abs(got - best) / std::abs(best);

  std::vector<double> kls;
  bool monotone = true;
  for (double alpha : {0.5, 1.0, 2.0, 5.0}) {
    OffRlConfig c = cfg;
    c.alpha = alpha;
    const TabularPolicy pa =
        extract_offline_rl_policy(prob.rho_o, solve_offline_rl(data, S, A, c, &p.mdp).dual.y);
    kls.push_back(oracles::hand_kl(oracles::truncated_occupancy(p.mdp, pa, 20000), prob.rho_o));
    if (kls.size() > 1 && kls.back() > kls[kls.size() - 2]) monotone = false;
  }
  return {single_err <= 1e-6 && rel <= 0.05 && monotone,
          fmt::format("single-state error {:.1e}; gridworld return {:.4f} vs oracle {:.4f} "
                      "({:.2f}%); KL over alpha 0.5,1,2,5: {:.4f} {:.4f} {:.4f} {:.4f}",
                      single_err, got, best, 100.0 * rel, kls[0], kls[1], kls[2], kls[3])};
}

struct Criterion {
  int id;
  std::string name;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace o2il

int main(int argc, char** argv) {
  using namespace o2il;
  if (argc != 3) {
    std::fprintf(stderr, "usage: %s <fixture dir> <out dir>\n", argv[0]);
    return 2;
  }
  g_out = argv[2];
  fs::create_directories(g_out);
  try {
    g_fixtures = load_fixture_dir(argv[1]);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "cannot load fixtures: %s\n", e.what());
    return 2;
  }

  const std::vector<Criterion> criteria = {
      {1, "strong duality", strong_duality},
      {2, "KKT identity", kkt_identity},
      {3, "flow feasibility", flow_feasibility},
      {4, "policy extraction equivalence", extraction_equivalence},
      {5, "stitching identity", stitching_identity},
      {6, "objective equivalence", objective_equivalence},
      {7, "dual convexity", convexity},
      {8, "gradient integrity", gradient_integrity},
      {9, "unlearning mitigation", unlearning_mitigation},
      {10, "end-to-end gridworld", end_to_end},
      {11, "offline RL", offline_rl},
  };

  std::FILE* report = std::fopen((g_out / "acceptance.txt").c_str(), "w");
  int passed = 0;
  int errors = 0;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, fmt::format("error: {}", e.what())};
      ++errors;
    }
    const std::string line =
        fmt::format("[{}] {:2d} {}: {} ({:.1f} s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail, seconds_since(t0));
    std::fputs(line.c_str(), stdout);
    std::fflush(stdout);
    if (report) std::fputs(line.c_str(), report);
    passed += o.pass;
  }
  const std::string summary = fmt::format("{}/{} criteria passed\n", passed, criteria.size());
  std::fputs(summary.c_str(), stdout);
  if (report) {
    std::fputs(summary.c_str(), report);
    std::fclose(report);
  }
  return errors == 0 ? 0 : 1;
}
