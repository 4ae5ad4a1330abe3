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

#ifndef O2IL_SSP_H_
#define O2IL_SSP_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "o2il/data.h"
#include "o2il/mdp.h"
#include "o2il/nn.h"
#include "o2il/reward.h"
#include "o2il/tables.h"

namespace o2il {

// Data of one saddle-point instance over a tabular space. `reward` is the
// reward actually entering the advantage (already scaled and shifted), and
// `transition` / `initial` are either the true model or estimates from data.
struct SspProblem {
  Table rho_o;
  Eigen::MatrixXd transition;
  Eigen::VectorXd initial;
  double discount = 0.99;
  Table reward;

  int n_states() const { return static_cast<int>(rho_o.rows()); }
  int n_actions() const { return static_cast<int>(rho_o.cols()); }
  void validate() const;

  static SspProblem from_mdp(const TabularMdp& mdp, const Table& rho_o,
                             const Table& reward);
  // Counts, empirical dynamics and episode-start frequencies from the union
  // dataset. `smoothing` is added to every pair of rho_o before
  // normalization.
  static SspProblem from_dataset(const Dataset& data, const Table& reward,
                                 int n_states, int n_actions, double discount,
                                 double smoothing = 0.0);
};

enum class SspMode {
  // Best-response y and damped Newton steps on the dual in nu (and lambda).
  kExact,
  // Alternating Adam steps with exact expectation gradients.
  kFullBatch,
  // Alternating Adam steps on mini-batches of transitions.
  kStochastic,
};

struct SspConfig {
  double lr_nu = 3e-4;
  double lr_y = 3e-4;
  long iterations = 200000;
  // Weight of the divergence term; rewards are not rescaled by the solver.
  double alpha = 1.0;
  double beta = 0.0;
  bool undiscounted = false;
  double y_min = 1e-6;
  double y_max = 1e6;
  std::uint64_t seed = 0;
  int batch = 256;
  SspMode mode = SspMode::kExact;
  int log_every = 100;
  // Gradient tolerance of the exact mode.
  double tolerance = 1e-11;
  // When set, the gap trace is dual value minus this primal value.
  std::optional<double> primal_value;

  void validate() const;
};

struct DualVariables {
  Eigen::VectorXd nu;
  Table y;
  std::optional<double> lambda;

  double lambda_or_zero() const { return lambda.value_or(0.0); }
};

nlohmann::json dual_to_json(const DualVariables& dual);
DualVariables dual_from_json(const nlohmann::json& j);

struct SspDiagnostics {
  std::vector<long> iteration;
  std::vector<double> objective;
  std::vector<double> kkt_residual;
  std::vector<double> duality_gap;
  long iterations_run = 0;
  long clamp_count = 0;
  bool converged = false;

  void write_csv(const std::string& path) const;
};

struct SspSolution {
  DualVariables dual;
  SspDiagnostics diagnostics;
};

// delta(s, a) = r(s, a) + g sum_s' T(s'|s, a) nu(s') - nu(s).
Table delta_expectation(const Eigen::VectorXd& nu, const Table& reward,
                        const TabularMdp& mdp);
Table delta_expectation(const SspProblem& problem, const Eigen::VectorXd& nu,
                        double discount);

double delta_sample(const Eigen::VectorXd& nu, const Table& reward, int s,
                    int a, int next_state, double discount);

// alpha E_rho_o[(delta + lambda) y - alpha y log(alpha y)]
//   + (1 - g) E_mu[nu] - lambda.
double ssp_objective(const SspProblem& problem, const DualVariables& dual,
                     const SspConfig& config);
// The same objective with expectations replaced by averages over the
// dataset transitions and its episode starts.
double ssp_objective_sample(const Dataset& data, const Table& reward,
                            double discount, const DualVariables& dual,
                            const SspConfig& config);

struct SspGradients {
  Eigen::VectorXd nu;
  Table y;
  double lambda = 0.0;
};

SspGradients ssp_gradients(const SspProblem& problem, const DualVariables& dual,
                           const SspConfig& config);
SspGradients ssp_gradients_sample(const Dataset& data, const Table& reward,
                                  double discount, const DualVariables& dual,
                                  const SspConfig& config);

// alpha y = exp((delta + lambda) / alpha - 1), clipped to [y_min, y_max].
// The exponent is clamped to [-30, 30]; clamps are added to *clamp_count.
Table closed_form_inner_y(const SspProblem& problem, const Eigen::VectorXd& nu,
                          double lambda, const SspConfig& config,
                          long* clamp_count = nullptr);

// alpha E_rho_o[exp((delta + lambda) / alpha - 1)] + (1 - g) E_mu[nu] - lambda.
// Throws NumericalError when an exponent exceeds 700.
double dual_value(const SspProblem& problem, const Eigen::VectorXd& nu,
                  const SspConfig& config, double lambda = 0.0);

// Max |y - closed_form_inner_y| over the support of rho_o.
double kkt_residual(const SspProblem& problem, const DualVariables& dual,
                    const SspConfig& config);

// Bellman-flow residual of an arbitrary pair table under the problem's
// dynamics, with discount forced to 1 in undiscounted mode.
Eigen::VectorXd flow_residual(const SspProblem& problem, const Table& rho,
                              bool undiscounted);

// rho_o * alpha * y.
Table ssp_occupancy(const SspProblem& problem, const DualVariables& dual,
                    double alpha);

// Stochastic mode needs the dataset the problem was built from.
SspSolution solve_ssp(const SspProblem& problem, const SspConfig& config,
                      const Dataset* data = nullptr);
SspSolution solve_undiscounted(const SspProblem& problem, SspConfig config,
                               const Dataset* data = nullptr);

// Neural nu(s) and log y(s, a) for feature-vector data.
struct ParametricDual {
  Mlp nu_net;
  Mlp log_y_net;
  FeatureMap features;
  double lambda = 0.0;
};

ParametricDual make_parametric_dual(const FeatureMap& features,
                                    const std::vector<int>& hidden,
                                    std::uint64_t seed);

using PairReward = std::function<double(const Point&, const Point&)>;

struct ParametricGradients {
  double objective = 0.0;
  Eigen::VectorXd nu;
  Eigen::VectorXd log_y;
  double lambda = 0.0;
};

// Sample objective on a batch of transitions and episode starts, with
// gradients for both networks (log y parameterization).
ParametricGradients parametric_gradients(const ParametricDual& dual,
                                         const std::vector<Transition>& batch,
                                         const std::vector<Point>& starts,
                                         const PairReward& reward,
                                         double discount,
                                         const SspConfig& config);

struct ParametricSolution {
  ParametricDual dual;
  std::vector<double> objective_trace;
};

ParametricSolution solve_ssp_parametric(const Dataset& data,
                                        const PairReward& reward,
                                        const FeatureMap& features,
                                        double discount,
                                        const std::vector<int>& hidden,
                                        const SspConfig& config);

}  // namespace o2il

#endif  // O2IL_SSP_H_
