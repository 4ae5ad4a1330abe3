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

#include "o2il/ssp.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "o2il/error.h"

namespace o2il {
namespace {

constexpr double kExponentClamp = 30.0;
constexpr double kOverflowExponent = 700.0;

double effective_discount(const SspProblem& problem, const SspConfig& config) {
  return config.undiscounted ? 1.0 : problem.discount;
}

double active_lambda(const DualVariables& dual, const SspConfig& config) {
  return config.undiscounted ? dual.lambda_or_zero() : 0.0;
}

void check_shapes(const SspProblem& problem, const DualVariables& dual) {
  if (dual.nu.size() != problem.n_states() || dual.y.rows() != problem.n_states() ||
      dual.y.cols() != problem.n_actions()) {
    throw ValidationError("dual variables do not match the problem shape");
  }
}

void check_y_range(const Table& y, const SspConfig& config) {
  const double lo = config.y_min * (1.0 - 1e-12);
  const double hi = config.y_max * (1.0 + 1e-12);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double v = y.data()[i];
    if (!(v >= lo && v <= hi)) {
      throw ValidationError(fmt::format("y = {} outside clip [{}, {}]", v,
                                        config.y_min, config.y_max));
    }
  }
}

// Flattened form of the dual used by the exact solver. Row i of `flow` is
// the pair (s, a) = (i / A, i % A); its first S entries are
// g T(.|s, a) - e_s and the optional last entry multiplies lambda.
struct FlatDual {
  Eigen::MatrixXd flow;
  Eigen::VectorXd reward;
  Eigen::VectorXd weight;
  Eigen::VectorXd linear;
  double alpha = 1.0;

  FlatDual(const SspProblem& p, double gamma, double alpha_in, bool with_lambda)
      : alpha(alpha_in) {
    const int S = p.n_states();
    const int A = p.n_actions();
    const int n = S * A;
    flow = gamma * p.transition;
    if (with_lambda) flow.conservativeResize(n, S + 1);
    for (int i = 0; i < n; ++i) {
      flow(i, i / A) -= 1.0;
      if (with_lambda) flow(i, S) = 1.0;
    }
    reward.resize(n);
    weight.resize(n);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        reward(s * A + a) = p.reward(s, a);
        weight(s * A + a) = p.rho_o(s, a);
      }
    }
    linear = Eigen::VectorXd::Zero(flow.cols());
    linear.head(S) = (1.0 - gamma) * p.initial;
    if (with_lambda) linear(S) = -1.0;
  }

  // exp((r + M theta) / alpha - 1); false when an active exponent overflows.
  bool exponentials(const Eigen::VectorXd& theta, Eigen::VectorXd& out) const {
    out = ((reward + flow * theta) / alpha).array() - 1.0;
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      if (weight(i) > 0.0 && out(i) > kOverflowExponent) return false;
      out(i) = weight(i) > 0.0 ? std::exp(out(i)) : 0.0;
    }
    return true;
  }

  double value(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd e;
    if (!exponentials(theta, e)) return std::numeric_limits<double>::infinity();
    return alpha * weight.dot(e) + linear.dot(theta);
  }
};

// One transition as pair indices.
using IndexTransition = std::array<int, 3>;

struct SampleTerms {
  double objective = 0.0;
  Eigen::VectorXd nu;
  Table y;
  double lambda = 0.0;
};

SampleTerms sample_terms(const std::vector<IndexTransition>& batch,
                         const std::vector<int>& starts, const Table& reward,
                         double gamma, const DualVariables& dual, double lambda,
                         double alpha) {
  if (batch.empty() || starts.empty()) {
    throw ValidationError("sample objective needs transitions and episode starts");
  }
  SampleTerms out;
  out.nu = Eigen::VectorXd::Zero(dual.nu.size());
  out.y = Table::Zero(dual.y.rows(), dual.y.cols());
  const double n = static_cast<double>(batch.size());
  const double n0 = static_cast<double>(starts.size());
  double y_sum = 0.0;
  for (const auto& [s, a, sn] : batch) {
    const double y = dual.y(s, a);
    const double delta = reward(s, a) + gamma * dual.nu(sn) - dual.nu(s);
    const double log_ay = std::log(alpha * y);
    out.objective += alpha * ((delta + lambda) * y - alpha * y * log_ay) / n;
    out.y(s, a) += alpha * (delta + lambda - alpha * log_ay - alpha) / n;
    out.nu(sn) += alpha * y * gamma / n;
    out.nu(s) -= alpha * y / n;
    y_sum += y;
  }
  for (int s0 : starts) {
    out.objective += (1.0 - gamma) * dual.nu(s0) / n0;
    out.nu(s0) += (1.0 - gamma) / n0;
  }
  out.objective -= lambda;
  out.lambda = alpha * y_sum / n - 1.0;
  return out;
}

std::vector<IndexTransition> index_transitions(const Dataset& data) {
  std::vector<IndexTransition> out;
  out.reserve(data.size());
  for (const auto& t : data.transitions) {
    out.push_back({point_index(t.state), point_index(t.action),
                   point_index(t.next_state)});
  }
  return out;
}

std::vector<int> start_states(const Dataset& data) {
  std::vector<int> out;
  for (const auto& t : data.transitions) {
    if (t.is_episode_start) out.push_back(point_index(t.state));
  }
  return out;
}

void record(const SspProblem& problem, const DualVariables& dual,
            const SspConfig& config, long iteration, SspDiagnostics& diag) {
  diag.iteration.push_back(iteration);
  diag.objective.push_back(ssp_objective(problem, dual, config));
  diag.kkt_residual.push_back(kkt_residual(problem, dual, config));
  if (config.primal_value) {
    double gap = std::numeric_limits<double>::quiet_NaN();
    try {
      gap = dual_value(problem, dual.nu, config, active_lambda(dual, config)) -
            *config.primal_value;
    } catch (const NumericalError&) {
    }
    diag.duality_gap.push_back(gap);
  }
}

std::string trace_tail(const SspDiagnostics& diag) {
  std::string out;
  const std::size_t n = diag.objective.size();
  for (std::size_t i = n > 5 ? n - 5 : 0; i < n; ++i) {
    out += fmt::format(" [{}] {:.6g}", diag.iteration[i], diag.objective[i]);
  }
  return out.empty() ? " (empty)" : out;
}

SspSolution solve_exact(const SspProblem& problem, const SspConfig& config) {
  const bool with_lambda = config.undiscounted;
  const double gamma = effective_discount(problem, config);
  const int S = problem.n_states();
  const FlatDual flat(problem, gamma, config.alpha, with_lambda);
  const Eigen::Index m = flat.flow.cols();

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(m);
  SspSolution out;
  auto& diag = out.diagnostics;
  auto unpack = [&](const Eigen::VectorXd& th) {
    DualVariables dual;
    dual.nu = th.head(S);
    if (with_lambda) dual.lambda = th(S);
    dual.y = closed_form_inner_y(problem, dual.nu, dual.lambda_or_zero(), config);
    return dual;
  };

  const long max_iter = std::min<long>(config.iterations, 10000);
  double value = flat.value(theta);
  Eigen::VectorXd e;
  long it = 0;
  for (; it < max_iter; ++it) {
    if (!flat.exponentials(theta, e)) {
      throw NumericalError("dual exponent overflow; scale the reward with alpha");
    }
    const Eigen::VectorXd pe = flat.weight.cwiseProduct(e);
    const Eigen::VectorXd grad = flat.flow.transpose() * pe + flat.linear;
    record(problem, unpack(theta), config, it, diag);
    if (!std::isfinite(value) || !grad.allFinite()) {
      throw NumericalError(fmt::format("non-finite dual at iteration {}:{}", it,
                                       trace_tail(diag)));
    }
    if (grad.lpNorm<Eigen::Infinity>() <= config.tolerance) {
      diag.converged = true;
      break;
    }
    Eigen::MatrixXd hess =
        flat.flow.transpose() * (pe / config.alpha).asDiagonal() * flat.flow;
    const double ridge = 1e-12 * std::max(1.0, hess.diagonal().maxCoeff());
    hess.diagonal().array() += ridge;
    Eigen::VectorXd step = -hess.ldlt().solve(grad);
    if (with_lambda) step.head(S).array() -= step.head(S).mean();
    if (!step.allFinite() || grad.dot(step) >= 0.0) step = -grad;

    double t = 1.0;
    double trial = flat.value(theta + step);
    const double slope = grad.dot(step);
    while (!(trial <= value + 1e-4 * t * slope) && t > 1e-12) {
      t *= 0.5;
      trial = flat.value(theta + t * step);
    }
    if (!(trial <= value)) break;
    const double decrease = value - trial;
    theta += t * step;
    value = trial;
    if (decrease <= 1e-16 * std::max(1.0, std::abs(value)) && t < 1.0) break;
  }
  out.dual = unpack(theta);
  out.dual.y = closed_form_inner_y(problem, out.dual.nu, out.dual.lambda_or_zero(),
                                   config, &diag.clamp_count);
  diag.iterations_run = it;
  record(problem, out.dual, config, it, diag);
  if (!diag.converged) {
    if (flat.exponentials(theta, e)) {
      const Eigen::VectorXd grad =
          flat.flow.transpose() * flat.weight.cwiseProduct(e) + flat.linear;
      diag.converged = grad.lpNorm<Eigen::Infinity>() <= 1e-8;
    }
  }
  return out;
}

SspSolution solve_gda(const SspProblem& problem, const SspConfig& config,
                      const Dataset* data) {
  const bool stochastic = config.mode == SspMode::kStochastic;
  const double gamma = effective_discount(problem, config);
  const int S = problem.n_states();
  const int A = problem.n_actions();

  std::vector<IndexTransition> all;
  std::vector<int> starts;
  if (stochastic) {
    if (data == nullptr || data->empty()) {
      throw ValidationError("stochastic SSP mode needs the dataset");
    }
    all = index_transitions(*data);
    starts = start_states(*data);
    if (starts.empty()) throw ValidationError("dataset has no episode starts");
  }

  DualVariables dual;
  dual.nu = Eigen::VectorXd::Zero(S);
  dual.y = Table::Ones(S, A);
  if (config.undiscounted) dual.lambda = 0.0;
  Table log_y = Table::Zero(S, A);
  const double log_lo = std::log(config.y_min);
  const double log_hi = std::log(config.y_max);

  Adam adam_y(S * A, {.lr = config.lr_y});
  Adam adam_nu(S + (config.undiscounted ? 1 : 0), {.lr = config.lr_nu});
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(S + (config.undiscounted ? 1 : 0));

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick_t(0, all.empty() ? 0 : all.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_s(0, starts.empty() ? 0 : starts.size() - 1);
  std::vector<IndexTransition> batch(static_cast<std::size_t>(config.batch));
  std::vector<int> start_batch(static_cast<std::size_t>(config.batch));

  auto gradients = [&](SspGradients& g) {
    if (!stochastic) {
      g = ssp_gradients(problem, dual, config);
      return;
    }
    SampleTerms terms = sample_terms(batch, start_batch, problem.reward, gamma, dual,
                                     active_lambda(dual, config), config.alpha);
    g.nu = std::move(terms.nu);
    g.y = std::move(terms.y);
    g.lambda = terms.lambda;
  };

  SspSolution out;
  auto& diag = out.diagnostics;
  int quiet_checks = 0;
  SspGradients g;
  long it = 0;
  for (; it < config.iterations; ++it) {
    if (stochastic) {
      for (auto& b : batch) b = all[pick_t(rng)];
      for (auto& s0 : start_batch) s0 = starts[pick_s(rng)];
    }
    gradients(g);
    Table g_log_y = g.y.cwiseProduct(dual.y);
    adam_y.ascend(flat(log_y), flat(g_log_y));
    log_y = log_y.cwiseMax(log_lo).cwiseMin(log_hi);
    dual.y = log_y.array().exp().matrix().cwiseMax(config.y_min).cwiseMin(config.y_max);

    gradients(g);
    Eigen::VectorXd g_theta(theta.size());
    g_theta.head(S) = g.nu;
    if (config.undiscounted) g_theta(S) = g.lambda;
    adam_nu.descend(theta, g_theta);
    if (config.undiscounted) {
      theta.head(S).array() -= theta.head(S).mean();
      dual.lambda = theta(S);
    }
    dual.nu = theta.head(S);

    if (!theta.allFinite() || !log_y.allFinite()) {
      throw NumericalError(fmt::format("non-finite iterate at iteration {}:{}", it,
                                       trace_tail(diag)));
    }
    if ((it + 1) % config.log_every == 0) {
      record(problem, dual, config, it + 1, diag);
      if (!std::isfinite(diag.objective.back())) {
        throw NumericalError(fmt::format("non-finite objective at iteration {}:{}",
                                         it + 1, trace_tail(diag)));
      }
      quiet_checks = diag.kkt_residual.back() < 1e-6 ? quiet_checks + 1 : 0;
      if (quiet_checks >= 100) {
        diag.converged = true;
        ++it;
        break;
      }
    }
  }
  diag.iterations_run = it;
  closed_form_inner_y(problem, dual.nu, active_lambda(dual, config), config,
                      &diag.clamp_count);
  out.dual = std::move(dual);
  return out;
}

}  // namespace

void SspProblem::validate() const {
  const int S = n_states();
  const int A = n_actions();
  if (S < 1 || A < 1) throw ValidationError("SSP problem: empty space");
  if (transition.rows() != S * A || transition.cols() != S) {
    throw ValidationError("SSP problem: transition shape mismatch");
  }
  if (initial.size() != S) throw ValidationError("SSP problem: initial size mismatch");
  if (reward.rows() != S || reward.cols() != A) {
    throw ValidationError("SSP problem: reward shape mismatch");
  }
  if (!(discount > 0.0 && discount <= 1.0)) {
    throw ValidationError("SSP problem: discount must lie in (0, 1]");
  }
  if ((rho_o.array() < 0.0).any() || std::abs(rho_o.sum() - 1.0) > 1e-9) {
    throw ValidationError("SSP problem: rho_o must be a distribution");
  }
}

SspProblem SspProblem::from_mdp(const TabularMdp& mdp, const Table& rho_o,
                                const Table& reward) {
  SspProblem p{rho_o, mdp.transition(), mdp.initial(), mdp.discount(), reward};
  p.validate();
  if (rho_o.rows() != mdp.n_states() || rho_o.cols() != mdp.n_actions()) {
    throw ValidationError("SSP problem: rho_o shape mismatch");
  }
  return p;
}

SspProblem SspProblem::from_dataset(const Dataset& data, const Table& reward,
                                    int n_states, int n_actions, double discount,
                                    double smoothing) {
  EmpiricalOptions options;
  options.smoothing = smoothing;
  SspProblem p{
      empirical_distribution(data, SourceFilter::kAll, n_states, n_actions, options)
          .probs,
      empirical_transition(data, n_states, n_actions),
      estimate_initial_distribution(data, n_states), discount, reward};
  p.validate();
  return p;
}

void SspConfig::validate() const {
  if (!(lr_nu > 0.0) || !(lr_y > 0.0)) {
    throw ValidationError("SSP config: learning rates must be positive");
  }
  if (iterations < 1) throw ValidationError("SSP config: iterations must be >= 1");
  if (!(alpha > 0.0)) throw ValidationError("SSP config: alpha must be positive");
  if (!(y_min > 0.0 && y_min < y_max)) {
    throw ValidationError("SSP config: invalid y clip");
  }
  if (batch < 1 || log_every < 1) {
    throw ValidationError("SSP config: batch and log_every must be positive");
  }
}

nlohmann::json dual_to_json(const DualVariables& dual) {
  nlohmann::json j = {{"nu", vector_to_json(dual.nu)}, {"y", matrix_to_json(dual.y)}};
  j["lambda"] = dual.lambda ? nlohmann::json(*dual.lambda) : nlohmann::json(nullptr);
  return j;
}

DualVariables dual_from_json(const nlohmann::json& j) {
  try {
    DualVariables d;
    d.nu = vector_from_json(j.at("nu"), "dual nu");
    d.y = matrix_from_json(j.at("y"), "dual y");
    if (j.contains("lambda") && !j.at("lambda").is_null()) {
      d.lambda = j.at("lambda").get<double>();
    }
    if (d.y.rows() != d.nu.size() || (d.y.array() <= 0.0).any()) {
      throw ValidationError("dual json: y must be positive with one row per state");
    }
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("dual json: {}", e.what()));
  }
}

void SspDiagnostics::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ValidationError(fmt::format("cannot write {}", path));
  out << "iter,objective,kkt_residual,gap\n";
  for (std::size_t i = 0; i < iteration.size(); ++i) {
    out << fmt::format("{},{:.17g},{:.17g},", iteration[i], objective[i],
                       kkt_residual[i]);
    if (i < duality_gap.size()) out << fmt::format("{:.17g}", duality_gap[i]);
    out << '\n';
  }
}

Table delta_expectation(const Eigen::VectorXd& nu, const Table& reward,
                        const TabularMdp& mdp) {
  SspProblem p{Table::Zero(mdp.n_states(), mdp.n_actions()), mdp.transition(),
               mdp.initial(), mdp.discount(), reward};
  if (reward.rows() != mdp.n_states() || reward.cols() != mdp.n_actions()) {
    throw ValidationError("delta_expectation: reward shape mismatch");
  }
  return delta_expectation(p, nu, mdp.discount());
}

Table delta_expectation(const SspProblem& problem, const Eigen::VectorXd& nu,
                        double discount) {
  const int S = problem.n_states();
  const int A = problem.n_actions();
  if (nu.size() != S) throw ValidationError("delta_expectation: nu size mismatch");
  if (problem.transition.rows() != S * A) {
    throw ValidationError("delta_expectation: missing transition model");
  }
  const Eigen::VectorXd next = problem.transition * nu;
  Table delta(S, A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      delta(s, a) = problem.reward(s, a) + discount * next(s * A + a) - nu(s);
    }
  }
  return delta;
}

double delta_sample(const Eigen::VectorXd& nu, const Table& reward, int s, int a,
                    int next_state, double discount) {
  return reward(s, a) + discount * nu(next_state) - nu(s);
}

double ssp_objective(const SspProblem& problem, const DualVariables& dual,
                     const SspConfig& config) {
  check_shapes(problem, dual);
  check_y_range(dual.y, config);
  const double gamma = effective_discount(problem, config);
  const double lambda = active_lambda(dual, config);
  const double alpha = config.alpha;
  const Table delta = delta_expectation(problem, dual.nu, gamma);
  const Table ay = alpha * dual.y;
  const Table inner = (delta.array() + lambda) * dual.y.array() -
                      alpha * dual.y.array() * ay.array().log();
  return alpha * (problem.rho_o.array() * inner.array()).sum() +
         (1.0 - gamma) * problem.initial.dot(dual.nu) - lambda;
}

double ssp_objective_sample(const Dataset& data, const Table& reward,
                            double discount, const DualVariables& dual,
                            const SspConfig& config) {
  check_y_range(dual.y, config);
  const double gamma = config.undiscounted ? 1.0 : discount;
  return sample_terms(index_transitions(data), start_states(data), reward, gamma, dual,
                      active_lambda(dual, config), config.alpha)
      .objective;
}

SspGradients ssp_gradients(const SspProblem& problem, const DualVariables& dual,
                           const SspConfig& config) {
  check_shapes(problem, dual);
  check_y_range(dual.y, config);
  const int S = problem.n_states();
  const int A = problem.n_actions();
  const double gamma = effective_discount(problem, config);
  const double lambda = active_lambda(dual, config);
  const double alpha = config.alpha;
  const Table delta = delta_expectation(problem, dual.nu, gamma);

  SspGradients g;
  g.y = alpha * problem.rho_o.array() *
        (delta.array() + lambda - alpha * (alpha * dual.y.array()).log() - alpha);
  const Table w = alpha * problem.rho_o.cwiseProduct(dual.y);
  Eigen::VectorXd w_flat(S * A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) w_flat(s * A + a) = w(s, a);
  }
  g.nu = gamma * problem.transition.transpose() * w_flat - w.rowwise().sum() +
         (1.0 - gamma) * problem.initial;
  g.lambda = w.sum() - 1.0;
  return g;
}

SspGradients ssp_gradients_sample(const Dataset& data, const Table& reward,
                                  double discount, const DualVariables& dual,
                                  const SspConfig& config) {
  check_y_range(dual.y, config);
  const double gamma = config.undiscounted ? 1.0 : discount;
  SampleTerms t = sample_terms(index_transitions(data), start_states(data), reward,
                               gamma, dual, active_lambda(dual, config), config.alpha);
  return {std::move(t.nu), std::move(t.y), t.lambda};
}

Table closed_form_inner_y(const SspProblem& problem, const Eigen::VectorXd& nu,
                          double lambda, const SspConfig& config,
                          long* clamp_count) {
  const double gamma = effective_discount(problem, config);
  if (!config.undiscounted) lambda = 0.0;
  const Table delta = delta_expectation(problem, nu, gamma);
  Table y(delta.rows(), delta.cols());
  long clamps = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    double z = (delta.data()[i] + lambda) / config.alpha - 1.0;
    if (z > kExponentClamp || z < -kExponentClamp) {
      z = std::clamp(z, -kExponentClamp, kExponentClamp);
      ++clamps;
    }
    y.data()[i] = std::clamp(std::exp(z) / config.alpha, config.y_min, config.y_max);
  }
  if (clamp_count != nullptr) *clamp_count += clamps;
  return y;
}

double dual_value(const SspProblem& problem, const Eigen::VectorXd& nu,
                  const SspConfig& config, double lambda) {
  const double gamma = effective_discount(problem, config);
  if (!config.undiscounted) lambda = 0.0;
  const Table delta = delta_expectation(problem, nu, gamma);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < delta.size(); ++i) {
    const double w = problem.rho_o.data()[i];
    if (w == 0.0) continue;
    const double z = (delta.data()[i] + lambda) / config.alpha - 1.0;
    if (z > kOverflowExponent) {
      throw NumericalError(fmt::format(
          "dual exponent {:.3g} overflows; rescale the reward with a larger alpha", z));
    }
    sum += w * std::exp(z);
  }
  return config.alpha * sum + (1.0 - gamma) * problem.initial.dot(nu) - lambda;
}

double kkt_residual(const SspProblem& problem, const DualVariables& dual,
                    const SspConfig& config) {
  const Table target =
      closed_form_inner_y(problem, dual.nu, active_lambda(dual, config), config);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < target.size(); ++i) {
    if (problem.rho_o.data()[i] > 0.0) {
      worst = std::max(worst, std::abs(dual.y.data()[i] - target.data()[i]));
    }
  }
  return worst;
}

Eigen::VectorXd flow_residual(const SspProblem& problem, const Table& rho,
                              bool undiscounted) {
  const int S = problem.n_states();
  const int A = problem.n_actions();
  if (rho.rows() != S || rho.cols() != A) {
    throw ValidationError("flow_residual: shape mismatch");
  }
  const double gamma = undiscounted ? 1.0 : problem.discount;
  Eigen::VectorXd r_flat(S * A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) r_flat(s * A + a) = rho(s, a);
  }
  return (1.0 - gamma) * problem.initial +
         gamma * problem.transition.transpose() * r_flat - rho.rowwise().sum();
}

Table ssp_occupancy(const SspProblem& problem, const DualVariables& dual,
                    double alpha) {
  return alpha * problem.rho_o.cwiseProduct(dual.y);
}

SspSolution solve_ssp(const SspProblem& problem, const SspConfig& config,
                      const Dataset* data) {
  problem.validate();
  config.validate();
  if (config.mode == SspMode::kExact) return solve_exact(problem, config);
  return solve_gda(problem, config, data);
}

SspSolution solve_undiscounted(const SspProblem& problem, SspConfig config,
                               const Dataset* data) {
  config.undiscounted = true;
  return solve_ssp(problem, config, data);
}

ParametricDual make_parametric_dual(const FeatureMap& features,
                                    const std::vector<int>& hidden,
                                    std::uint64_t seed) {
  std::vector<int> nu_widths{features.state_dim()};
  nu_widths.insert(nu_widths.end(), hidden.begin(), hidden.end());
  nu_widths.push_back(1);
  std::vector<int> y_widths{features.input_dim()};
  y_widths.insert(y_widths.end(), hidden.begin(), hidden.end());
  y_widths.push_back(1);
  return {Mlp(nu_widths, seed), Mlp(y_widths, seed + 1), features, 0.0};
}

ParametricGradients parametric_gradients(const ParametricDual& dual,
                                         const std::vector<Transition>& batch,
                                         const std::vector<Point>& starts,
                                         const PairReward& reward, double discount,
                                         const SspConfig& config) {
  if (batch.empty() || starts.empty()) {
    throw ValidationError("parametric SSP batch needs transitions and starts");
  }
  const double gamma = config.undiscounted ? 1.0 : discount;
  const double lambda = config.undiscounted ? dual.lambda : 0.0;
  const double alpha = config.alpha;
  const FeatureMap& f = dual.features;
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index n0 = static_cast<Eigen::Index>(starts.size());

  Eigen::MatrixXd xs(f.state_dim(), n), xn(f.state_dim(), n), xsa(f.input_dim(), n),
      x0(f.state_dim(), n0);
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& t = batch[static_cast<std::size_t>(i)];
    xs.col(i) = f.state(t.state);
    xn.col(i) = f.state(t.next_state);
    xsa.col(i) = f.state_action(t.state, t.action);
    r(i) = reward(t.state, t.action);
  }
  for (Eigen::Index j = 0; j < n0; ++j) x0.col(j) = f.state(starts[static_cast<std::size_t>(j)]);

  MlpTrace ts, tn, t0, ty;
  const Eigen::MatrixXd nu_s = dual.nu_net.forward(xs, ts);
  const Eigen::MatrixXd nu_n = dual.nu_net.forward(xn, tn);
  const Eigen::MatrixXd nu_0 = dual.nu_net.forward(x0, t0);
  const Eigen::MatrixXd u_raw = dual.log_y_net.forward(xsa, ty);
  const double lo = std::log(config.y_min);
  const double hi = std::log(config.y_max);

  ParametricGradients out;
  Eigen::MatrixXd g_s(1, n), g_n(1, n), g_u(1, n), g_0(1, n0);
  double y_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = std::clamp(u_raw(0, i), lo, hi);
    const double y = std::exp(u);
    const double delta = r(i) + gamma * nu_n(0, i) - nu_s(0, i);
    const double log_ay = std::log(alpha) + u;
    out.objective += alpha * ((delta + lambda) * y - alpha * y * log_ay) / n;
    const bool inside = u_raw(0, i) >= lo && u_raw(0, i) <= hi;
    g_u(0, i) = inside ? alpha * y * (delta + lambda - alpha * log_ay - alpha) / n : 0.0;
    g_n(0, i) = alpha * y * gamma / n;
    g_s(0, i) = -alpha * y / n;
    y_sum += y;
  }
  for (Eigen::Index j = 0; j < n0; ++j) {
    out.objective += (1.0 - gamma) * nu_0(0, j) / n0;
    g_0(0, j) = (1.0 - gamma) / n0;
  }
  out.objective -= lambda;
  out.lambda = alpha * y_sum / n - 1.0;
  out.nu = dual.nu_net.backward(ts, g_s) + dual.nu_net.backward(tn, g_n) +
           dual.nu_net.backward(t0, g_0);
  out.log_y = dual.log_y_net.backward(ty, g_u);
  return out;
}

ParametricSolution solve_ssp_parametric(const Dataset& data, const PairReward& reward,
                                        const FeatureMap& features, double discount,
                                        const std::vector<int>& hidden,
                                        const SspConfig& config) {
  config.validate();
  if (data.empty()) throw ValidationError("parametric SSP: empty dataset");
  std::vector<Point> starts;
  for (const auto& t : data.transitions) {
    if (t.is_episode_start) starts.push_back(t.state);
  }
  if (starts.empty()) throw ValidationError("parametric SSP: no episode starts");

  ParametricSolution out{make_parametric_dual(features, hidden, config.seed), {}};
  auto& dual = out.dual;
  Adam adam_nu(dual.nu_net.num_params(), {.lr = config.lr_nu});
  Adam adam_y(dual.log_y_net.num_params(), {.lr = config.lr_y});
  Adam adam_lambda(1, {.lr = config.lr_nu});
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick_t(0, data.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_s(0, starts.size() - 1);
  std::vector<Transition> batch(static_cast<std::size_t>(config.batch));
  std::vector<Point> start_batch(static_cast<std::size_t>(config.batch));

  for (long it = 0; it < config.iterations; ++it) {
    for (auto& b : batch) b = data.transitions[pick_t(rng)];
    for (auto& s0 : start_batch) s0 = starts[pick_s(rng)];
    ParametricGradients g =
        parametric_gradients(dual, batch, start_batch, reward, discount, config);
    if (!std::isfinite(g.objective) || !g.nu.allFinite() || !g.log_y.allFinite()) {
      throw NumericalError(
          fmt::format("parametric SSP diverged at iteration {} (objective {})", it,
                      g.objective));
    }
    adam_y.ascend(dual.log_y_net.params(), g.log_y);
    adam_nu.descend(dual.nu_net.params(), g.nu);
    if (config.undiscounted) {
      Eigen::VectorXd lam = Eigen::VectorXd::Constant(1, dual.lambda);
      adam_lambda.descend(lam, Eigen::VectorXd::Constant(1, g.lambda));
      dual.lambda = lam(0);
    }
    if ((it + 1) % config.log_every == 0) out.objective_trace.push_back(g.objective);
  }
  return out;
}

}  // namespace o2il
