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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "o2il/error.h"

namespace o2il {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_inputs(const TabularMdp& mdp, const Table& reward, const Table& rho_o,
                  double alpha) {
  const int S = mdp.n_states();
  const int A = mdp.n_actions();
  if (reward.rows() != S || reward.cols() != A || rho_o.rows() != S ||
      rho_o.cols() != A) {
    throw ValidationError("oracle: table shape mismatch");
  }
  if (!(alpha > 0.0)) throw ValidationError("oracle: alpha must be positive");
  if ((rho_o.array() < 0.0).any() || rho_o.sum() <= 0.0) {
    throw ValidationError("oracle: rho_o must be a nonnegative table with mass");
  }
}

// Row-wise geometric path between two policies in log space.
Table geometric_mix(const Table& log_a, const Table& log_b, double t) {
  Table out(log_a.rows(), log_a.cols());
  for (Eigen::Index s = 0; s < out.rows(); ++s) {
    double m = kNegInf;
    for (Eigen::Index a = 0; a < out.cols(); ++a) {
      const double la = log_a(s, a);
      const double lb = log_b(s, a);
      double v;
      if (la == kNegInf || lb == kNegInf) {
        v = (t == 0.0 && la != kNegInf) || (t == 1.0 && lb != kNegInf)
                ? (t == 0.0 ? la : lb)
                : kNegInf;
      } else {
        v = (1.0 - t) * la + t * lb;
      }
      out(s, a) = v;
      m = std::max(m, v);
    }
    double z = 0.0;
    for (Eigen::Index a = 0; a < out.cols(); ++a) {
      out(s, a) = out(s, a) == kNegInf ? 0.0 : std::exp(out(s, a) - m);
      z += out(s, a);
    }
    out.row(s) /= z;
  }
  return out;
}

Table log_table(const Table& p) {
  Table out(p.rows(), p.cols());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    out.data()[i] = p.data()[i] > 0.0 ? std::log(p.data()[i]) : kNegInf;
  }
  return out;
}

// Values of the per-pair reward r under the policy; pairs with zero
// probability never contribute.
Eigen::VectorXd soft_values(const TabularMdp& mdp, const TabularPolicy& policy,
                            const Table& r, const Eigen::VectorXd& state_marginal) {
  const int S = mdp.n_states();
  Eigen::VectorXd r_pi = Eigen::VectorXd::Zero(S);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      if (policy(s, a) > 0.0) r_pi(s) += policy(s, a) * r(s, a);
    }
  }
  const Eigen::MatrixXd kernel = policy_transition(mdp, policy);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(S, S);
  if (!mdp.undiscounted()) {
    return (eye - mdp.discount() * kernel).partialPivLu().solve(r_pi);
  }
  const double gain = state_marginal.dot(r_pi);
  Eigen::MatrixXd system(S + 1, S);
  system.topRows(S) = eye - kernel;
  system.row(S) = state_marginal.transpose();
  Eigen::VectorXd rhs(S + 1);
  rhs.head(S) = r_pi.array() - gain;
  rhs(S) = 0.0;
  return system.colPivHouseholderQr().solve(rhs);
}

OracleSolution search(const TabularMdp& mdp, const Table& reward, const Table& rho_o,
                      const OracleOptions& options) {
  check_inputs(mdp, reward, rho_o, options.alpha);
  const int S = mdp.n_states();
  const int A = mdp.n_actions();
  const double alpha = options.alpha;
  const double gamma = mdp.discount();
  const Table log_rho_o = log_table(rho_o);

  Table probs = normalize_rows(rho_o);
  auto objective_of = [&](const Table& p) {
    return primal_objective(mdp, reward, rho_o, alpha, TabularPolicy(p));
  };
  double value = objective_of(probs);
  if (!std::isfinite(value)) {
    throw NumericalError("oracle: the behavior policy leaves the support of rho_o");
  }

  int it = 0;
  int quiet = 0;
  for (; it < options.max_iterations; ++it) {
    const TabularPolicy pi(probs);
    const OccupancyMeasure occ = occupancy(mdp, pi);
    const Eigen::VectorXd marginal = occ.state_marginal();
    Table r_eff = Table::Zero(S, A);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        if (probs(s, a) <= 0.0) continue;
        const double rho = std::max(occ(s, a), 1e-300);
        r_eff(s, a) = reward(s, a) - alpha * (std::log(rho) - log_rho_o(s, a));
      }
    }
    const Eigen::VectorXd v = soft_values(mdp, pi, r_eff, marginal);
    const Eigen::VectorXd next = mdp.transition() * v;

    Table log_target(S, A);
    for (int s = 0; s < S; ++s) {
      bool any = false;
      for (int a = 0; a < A; ++a) {
        if (rho_o(s, a) > 0.0) {
          log_target(s, a) =
              log_rho_o(s, a) + (reward(s, a) + gamma * next(s * A + a)) / alpha;
          any = true;
        } else {
          log_target(s, a) = kNegInf;
        }
      }
      if (!any) {
        for (int a = 0; a < A; ++a) log_target(s, a) = std::log(probs(s, a));
      }
    }
    const Table log_current = log_table(probs);
    const Table target = geometric_mix(log_current, log_target, 1.0);
    if (max_row_tv(target, probs) < 1e-14) break;

    // Golden-section search on t in [0, 1].
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = 0.0;
    double hi = 1.0;
    double x1 = hi - ratio * (hi - lo);
    double x2 = lo + ratio * (hi - lo);
    double f1 = objective_of(geometric_mix(log_current, log_target, x1));
    double f2 = objective_of(geometric_mix(log_current, log_target, x2));
    for (int k = 0; k < 60 && hi - lo > 1e-10; ++k) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + ratio * (hi - lo);
        f2 = objective_of(geometric_mix(log_current, log_target, x2));
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - ratio * (hi - lo);
        f1 = objective_of(geometric_mix(log_current, log_target, x1));
      }
    }
    double best_t = f1 > f2 ? x1 : x2;
    double best = std::max(f1, f2);
    const double f_end = objective_of(target);
    if (f_end > best) {
      best = f_end;
      best_t = 1.0;
    }
    if (!(best > value)) break;
    const double gain = best - value;
    probs = geometric_mix(log_current, log_target, best_t);
    value = best;
    quiet = gain < options.tolerance ? quiet + 1 : 0;
    if (quiet >= 3) break;
  }

  const TabularPolicy pi(probs);
  return {occupancy(mdp, pi), pi, value, it};
}

}  // namespace

double primal_objective(const Table& rho, const Table& reward, const Table& rho_o,
                        double alpha) {
  const double kl = kl_divergence(rho, rho_o);
  if (!std::isfinite(kl)) return kNegInf;
  return (rho.array() * reward.array()).sum() - alpha * kl;
}

double primal_objective(const TabularMdp& mdp, const Table& reward,
                        const Table& rho_o, double alpha,
                        const TabularPolicy& policy) {
  return primal_objective(occupancy(mdp, policy).rho(), reward, rho_o, alpha);
}

OracleSolution primal_policy_search(const TabularMdp& mdp, const Table& reward,
                                    const Table& rho_o, const OracleOptions& options) {
  return search(mdp, reward, rho_o, options);
}

OracleSolution primal_brute_force(const TabularMdp& mdp, const Table& reward,
                                  const Table& rho_o, const OracleOptions& options) {
  if (mdp.n_states() > 5 || mdp.n_actions() > 3) {
    throw ValidationError(fmt::format(
        "primal_brute_force: {} states x {} actions exceeds the 5 x 3 limit",
        mdp.n_states(), mdp.n_actions()));
  }
  return search(mdp, reward, rho_o, options);
}

double duality_gap(const OracleSolution& oracle, const SspProblem& problem,
                   const Eigen::VectorXd& nu, const SspConfig& config,
                   double lambda) {
  return dual_value(problem, nu, config, lambda) - oracle.primal_value;
}

Fixture make_fixture(const FixtureSpec& spec) {
  const TabularMdp mdp = random_mdp(
      {spec.n_states, spec.n_actions, spec.discount, spec.seed, 0.05});
  std::mt19937_64 rng(spec.seed ^ 0x5bd1e995ULL);
  std::gamma_distribution<double> dirichlet(1.0, 1.0);
  auto random_policy = [&]() {
    Table p(spec.n_states, spec.n_actions);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = dirichlet(rng) + 1e-3;
    return TabularPolicy(normalize_rows(p));
  };
  std::normal_distribution<double> noise(0.0, 0.5);
  // Multiplicative noise keeps the tables off the flow polytope, like counts.
  auto perturbed_occupancy = [&]() {
    Table rho = occupancy(mdp, random_policy()).rho();
    for (Eigen::Index i = 0; i < rho.size(); ++i) rho.data()[i] *= std::exp(noise(rng));
    return Table(rho / rho.sum());
  };
  const double w = spec.expert_weight;
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const Table rho_e = perturbed_occupancy();
    const Table rho_s = perturbed_occupancy();
    const Table rho_o = w * rho_e + (1.0 - w) * rho_s;
    const Table d = rho_e.array() / (rho_e + rho_o).array();
    if (d.minCoeff() >= 0.1 && d.maxCoeff() <= 0.9) {
      return {fmt::format("s{}_a{}_g{}_{}", spec.n_states, spec.n_actions,
                          spec.discount == 0.9 ? "090" : "099", spec.seed),
              spec.seed, mdp, rho_e, rho_o / rho_o.sum()};
    }
  }
  throw NumericalError("make_fixture: no admissible occupancies found");
}

std::vector<FixtureSpec> standard_fixture_specs() {
  const int sizes[] = {2, 3, 5};
  const int actions[] = {2, 3};
  const double discounts[] = {0.9, 0.99};
  std::vector<FixtureSpec> out;
  for (int i = 0; i < 20; ++i) {
    out.push_back({sizes[i % 3], actions[(i / 3) % 2], discounts[(i / 6) % 2],
                   static_cast<std::uint64_t>(1000 + i), 0.5});
  }
  return out;
}

nlohmann::json fixture_to_json(const Fixture& fixture) {
  return {{"name", fixture.name},
          {"seed", fixture.seed},
          {"mdp", mdp_to_json(fixture.mdp)},
          {"rho_e", matrix_to_json(fixture.rho_e)},
          {"rho_o", matrix_to_json(fixture.rho_o)}};
}

Fixture fixture_from_json(const nlohmann::json& j) {
  try {
    Fixture f{j.at("name").get<std::string>(), j.at("seed").get<std::uint64_t>(),
              mdp_from_json(j.at("mdp")), matrix_from_json(j.at("rho_e"), "rho_e"),
              matrix_from_json(j.at("rho_o"), "rho_o")};
    const int S = f.mdp.n_states();
    const int A = f.mdp.n_actions();
    if (f.rho_e.rows() != S || f.rho_e.cols() != A || f.rho_o.rows() != S ||
        f.rho_o.cols() != A) {
      throw ValidationError("fixture: occupancy shape mismatch");
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("fixture json: {}", e.what()));
  }
}

Fixture load_fixture(const std::string& path) {
  return fixture_from_json(read_json_file(path));
}

std::vector<Fixture> load_fixture_dir(const std::string& dir) {
  std::vector<std::string> paths;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.path().extension() == ".json") paths.push_back(entry.path().string());
  }
  if (ec) throw ValidationError(fmt::format("cannot list {}: {}", dir, ec.message()));
  std::sort(paths.begin(), paths.end());
  std::vector<Fixture> out;
  for (const auto& p : paths) out.push_back(load_fixture(p));
  return out;
}

Table fixture_reward(const Fixture& fixture, double alpha) {
  if ((fixture.rho_e.array() <= 0.0).any() || (fixture.rho_o.array() <= 0.0).any()) {
    throw ValidationError(fmt::format("fixture {}: distributions need full support",
                                      fixture.name));
  }
  return alpha * (fixture.rho_e.array() / fixture.rho_o.array()).log().matrix();
}

OracleCheck oracle_check(const Fixture& fixture, double alpha) {
  const Table reward = fixture_reward(fixture, alpha);
  const SspProblem problem = SspProblem::from_mdp(fixture.mdp, fixture.rho_o, reward);
  SspConfig config;
  config.alpha = alpha;
  const SspSolution sol = solve_ssp(problem, config);
  OracleOptions options;
  options.alpha = alpha;
  const OracleSolution oracle =
      primal_policy_search(fixture.mdp, reward, fixture.rho_o, options);
  OracleCheck out;
  out.fixture = fixture.name;
  out.alpha = alpha;
  out.dual_value = dual_value(problem, sol.dual.nu, config);
  out.primal_value = oracle.primal_value;
  out.gap = out.dual_value - out.primal_value;
  out.kkt = kkt_residual(problem, sol.dual, config);
  out.flow_l1 =
      flow_residual(problem, ssp_occupancy(problem, sol.dual, alpha), false).lpNorm<1>();
  out.iterations = sol.diagnostics.iterations_run;
  out.converged = sol.diagnostics.converged;
  return out;
}

}  // namespace o2il
