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

#include "o2il/finetune.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "o2il/error.h"

namespace o2il {
namespace {

double logit_of(double p) { return std::log(p / (1.0 - p)); }

int draw(const Eigen::Ref<const Eigen::VectorXd>& probs, std::mt19937_64& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs(i);
    if (u < acc) return static_cast<int>(i);
  }
  for (Eigen::Index i = probs.size() - 1; i > 0; --i) {
    if (probs(i) > 0.0) return static_cast<int>(i);
  }
  return 0;
}

double pair_reward(double d, PolicyReward kind) {
  return kind == PolicyReward::kNegLogD ? -std::log(d) : std::log1p(-d);
}

std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace

DiscInit parse_disc_init(const std::string& name) {
  if (name == "stitched") return DiscInit::kStitched;
  if (name == "random") return DiscInit::kRandom;
  if (name == "table") return DiscInit::kTable;
  throw ValidationError(
      fmt::format("unknown discriminator init '{}' (stitched, random, table)", name));
}

std::string to_string(DiscInit init) {
  switch (init) {
    case DiscInit::kStitched: return "stitched";
    case DiscInit::kRandom: return "random";
    case DiscInit::kTable: return "table";
  }
  return "?";
}

void GailConfig::validate() const {
  if (episodes < 1 || horizon < 1 || disc_steps_per_iter < 0 ||
      policy_steps_per_iter < 0) {
    throw ValidationError("GAIL config: counts must be positive");
  }
  if (episodes_per_iter < 2) {
    throw ValidationError("GAIL config: episodes_per_iter must be at least 2");
  }
  if (!(lr_disc > 0.0) || !(lr_policy > 0.0)) {
    throw ValidationError("GAIL config: learning rates must be positive");
  }
  if (!(init_std >= 0.0) || expert_batch < 0) {
    throw ValidationError("GAIL config: invalid init_std or expert_batch");
  }
}

void LearningCurve::add(long episodes, const std::string& metric, double value) {
  if (!points.empty() && episodes < points.back().episodes) {
    throw ValidationError("learning curve episodes must be nondecreasing");
  }
  points.push_back({episodes, metric, value});
}

std::vector<std::pair<long, double>> LearningCurve::series(
    const std::string& metric) const {
  std::vector<std::pair<long, double>> out;
  for (const auto& p : points) {
    if (p.metric == metric) out.emplace_back(p.episodes, p.value);
  }
  return out;
}

std::optional<long> LearningCurve::first_reaching(const std::string& metric,
                                                  double level) const {
  for (const auto& [episodes, value] : series(metric)) {
    if (value >= level) return episodes;
  }
  return std::nullopt;
}

void LearningCurve::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ValidationError(fmt::format("cannot write {}", path));
  out << "episodes,metric,value\n";
  for (const auto& p : points) {
    out << fmt::format("{},{},{:.17g}\n", p.episodes, p.metric, p.value);
  }
}

LearningCurve LearningCurve::read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot read {}", path));
  std::string line;
  if (!std::getline(in, line) || line != "episodes,metric,value") {
    throw ValidationError(fmt::format("{}: missing curve header", path));
  }
  LearningCurve curve;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw ValidationError(fmt::format("{}:{}: malformed curve row", path, line_no));
    }
    try {
      curve.add(std::stol(line.substr(0, c1)), line.substr(c1 + 1, c2 - c1 - 1),
                std::stod(line.substr(c2 + 1)));
    } catch (const std::logic_error&) {
      throw ValidationError(fmt::format("{}:{}: malformed curve row", path, line_no));
    }
  }
  return curve;
}

void LearningCurve::write_svg(const std::string& path, const std::string& metric) const {
  const auto data = series(metric);
  std::vector<std::pair<double, double>> pts;
  for (const auto& [e, v] : data) {
    if (std::isfinite(v)) pts.emplace_back(static_cast<double>(e), v);
  }
  constexpr double kW = 640, kH = 400, kPad = 50;
  double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
  if (!pts.empty()) {
    x_lo = x_hi = pts[0].first;
    y_lo = y_hi = pts[0].second;
    for (const auto& [x, y] : pts) {
      x_lo = std::min(x_lo, x);
      x_hi = std::max(x_hi, x);
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
    }
  }
  if (x_hi == x_lo) x_hi = x_lo + 1;
  if (y_hi == y_lo) y_hi = y_lo + 1;
  auto sx = [&](double x) { return kPad + (x - x_lo) / (x_hi - x_lo) * (kW - 2 * kPad); };
  auto sy = [&](double y) { return kH - kPad - (y - y_lo) / (y_hi - y_lo) * (kH - 2 * kPad); };

  std::ofstream out(path);
  if (!out) throw ValidationError(fmt::format("cannot write {}", path));
  out << fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\">\n", kW, kH);
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << fmt::format(
      "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n"
      "<line x1=\"{0}\" y1=\"{3}\" x2=\"{0}\" y2=\"{1}\" stroke=\"black\"/>\n",
      kPad, kH - kPad, kW - kPad, kPad);
  out << fmt::format(
      "<text x=\"{}\" y=\"{}\" font-size=\"12\">episodes {:.0f} .. {:.0f}</text>\n",
      kPad, kH - 15, x_lo, x_hi);
  out << fmt::format(
      "<text x=\"{}\" y=\"{}\" font-size=\"12\">{} {:.4g} .. {:.4g}</text>\n", kPad, 25,
      svg_escape(metric), y_lo, y_hi);
  out << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (const auto& [x, y] : pts) out << fmt::format("{:.2f},{:.2f} ", sx(x), sy(y));
  out << "\"/>\n</svg>\n";
}

GailDiscriminator::GailDiscriminator(Table d_logit, Table log_y, double alpha,
                                     ClipBounds clip)
    : d_logit_(std::move(d_logit)), log_y_(std::move(log_y)), alpha_(alpha), clip_(clip) {
  if (d_logit_.rows() != log_y_.rows() || d_logit_.cols() != log_y_.cols()) {
    throw ValidationError("GAIL discriminator: table shapes differ");
  }
  if (!(alpha_ > 0.0)) throw ValidationError("GAIL discriminator: alpha must be > 0");
  if (!(clip_.lo > 0.0 && clip_.lo < clip_.hi && clip_.hi < 1.0)) {
    throw ValidationError("GAIL discriminator: clip must lie inside (0, 1)");
  }
}

GailDiscriminator GailDiscriminator::stitched(const StitchedDiscriminator& d0,
                                              int n_states, int n_actions) {
  const ClipBounds clip = d0.d_part().clip();
  const Table d = d0.d_part().table(n_states, n_actions);
  Table d_logit(n_states, n_actions);
  for (Eigen::Index i = 0; i < d.size(); ++i) d_logit.data()[i] = logit_of(d.data()[i]);
  const Table log_y = d0.y_table(n_states, n_actions).array().log();
  return GailDiscriminator(std::move(d_logit), log_y, d0.alpha(), clip);
}

GailDiscriminator GailDiscriminator::random(int n_states, int n_actions, double alpha,
                                            ClipBounds clip, double std,
                                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std);
  Table d_logit(n_states, n_actions);
  Table log_y(n_states, n_actions);
  for (Eigen::Index i = 0; i < d_logit.size(); ++i) d_logit.data()[i] = normal(rng);
  for (Eigen::Index i = 0; i < log_y.size(); ++i) log_y.data()[i] = normal(rng);
  return GailDiscriminator(std::move(d_logit), std::move(log_y), alpha, clip);
}

GailDiscriminator GailDiscriminator::from_table(const Table& d, double alpha,
                                                ClipBounds clip) {
  if ((d.array() <= 0.0).any() || (d.array() >= 1.0).any()) {
    throw ValidationError("GAIL discriminator table must lie in (0, 1)");
  }
  Table log_y(d.rows(), d.cols());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    log_y.data()[i] = logit_of(d.data()[i]) - std::log(alpha);
  }
  return GailDiscriminator(Table::Zero(d.rows(), d.cols()), std::move(log_y), alpha,
                           clip);
}

double GailDiscriminator::logit(int s, int a) const {
  const double d = clip_.apply(sigmoid(d_logit_(s, a)));
  return std::log(alpha_) + log_y_(s, a) - logit_of(d);
}

double GailDiscriminator::operator()(int s, int a) const { return sigmoid(logit(s, a)); }

Table GailDiscriminator::table() const {
  Table out(d_logit_.rows(), d_logit_.cols());
  for (int s = 0; s < out.rows(); ++s) {
    for (int a = 0; a < out.cols(); ++a) out(s, a) = (*this)(s, a);
  }
  return out;
}

Eigen::VectorXd GailDiscriminator::params() const {
  Eigen::VectorXd out(num_params());
  out.head(d_logit_.size()) = flat(d_logit_);
  out.tail(log_y_.size()) = flat(log_y_);
  return out;
}

void GailDiscriminator::set_params(const Eigen::VectorXd& params) {
  if (params.size() != num_params()) {
    throw ValidationError("GAIL discriminator: parameter size mismatch");
  }
  flat(d_logit_) = params.head(d_logit_.size());
  flat(log_y_) = params.tail(log_y_.size());
}

nlohmann::json GailDiscriminator::to_json() const {
  return {{"kind", "gail"},
          {"alpha", alpha_},
          {"clip", {clip_.lo, clip_.hi}},
          {"d_logit", matrix_to_json(d_logit_)},
          {"log_y", matrix_to_json(log_y_)}};
}

GailDiscriminator GailDiscriminator::from_json(const nlohmann::json& j) {
  try {
    const auto clip = j.at("clip").get<std::vector<double>>();
    if (clip.size() != 2) throw ValidationError("GAIL discriminator json: bad clip");
    return GailDiscriminator(matrix_from_json(j.at("d_logit"), "d_logit"),
                             matrix_from_json(j.at("log_y"), "log_y"),
                             j.at("alpha").get<double>(), {clip[0], clip[1]});
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("GAIL discriminator json: {}", e.what()));
  }
}

std::vector<Episode> rollout(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                             int n_episodes, int horizon, std::mt19937_64& rng) {
  const int A = mdp.n_actions();
  std::vector<Episode> out(static_cast<std::size_t>(n_episodes));
  for (auto& ep : out) {
    ep.states.reserve(static_cast<std::size_t>(horizon));
    ep.actions.reserve(static_cast<std::size_t>(horizon));
    int s = draw(mdp.initial(), rng);
    for (int t = 0; t < horizon; ++t) {
      const int a = policy.sample(s, rng);
      ep.states.push_back(s);
      ep.actions.push_back(a);
      s = draw(mdp.transition().row(s * A + a).transpose(), rng);
    }
  }
  return out;
}

std::vector<Pair> episode_pairs(const std::vector<Episode>& episodes) {
  std::vector<Pair> out;
  for (const auto& ep : episodes) {
    for (std::size_t t = 0; t < ep.states.size(); ++t) {
      out.push_back({ep.states[t], ep.actions[t]});
    }
  }
  return out;
}

std::vector<Pair> expert_pairs(const Dataset& data) {
  std::vector<Pair> out;
  for (const auto& t : data.transitions) {
    if (t.source == Source::kExpert) {
      out.push_back({point_index(t.state), point_index(t.action)});
    }
  }
  return out;
}

std::pair<double, Eigen::VectorXd> gail_discriminator_gradient(
    const GailDiscriminator& d, const std::vector<Pair>& policy_pairs,
    const std::vector<Pair>& expert_pairs) {
  if (policy_pairs.empty() || expert_pairs.empty()) {
    throw ValidationError("discriminator step needs policy and expert samples");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(d.n_states()) * d.n_actions();
  const int S = d.n_states();
  const Eigen::VectorXd theta = d.params();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(2 * n);
  double value = 0.0;
  auto accumulate = [&](const std::vector<Pair>& pairs, bool positive) {
    const double w = 1.0 / static_cast<double>(pairs.size());
    for (const auto& [s, a] : pairs) {
      const double l = d.logit(s, a);
      const double p = sigmoid(l);
      value += w * (positive ? log_sigmoid(l) : log_sigmoid(-l));
      const double g_l = w * (positive ? 1.0 - p : -p);
      const Eigen::Index idx = static_cast<Eigen::Index>(a) * S + s;
      const double dp = sigmoid(theta(idx));
      if (dp > d.clip().lo && dp < d.clip().hi) grad(idx) -= g_l;
      grad(n + idx) += g_l;
    }
  };
  accumulate(policy_pairs, true);
  accumulate(expert_pairs, false);
  return {value, std::move(grad)};
}

double gail_discriminator_step(GailDiscriminator& d,
                               const std::vector<Pair>& policy_pairs,
                               const std::vector<Pair>& expert_pairs, Adam& optimizer) {
  auto [value, grad] = gail_discriminator_gradient(d, policy_pairs, expert_pairs);
  if (!std::isfinite(value) || !grad.allFinite()) {
    throw NumericalError(fmt::format("discriminator loss is not finite ({})", -value));
  }
  Eigen::VectorXd theta = d.params();
  optimizer.ascend(theta, grad);
  d.set_params(theta);
  return -value;
}

std::vector<Eigen::VectorXd> policy_advantages(const std::vector<Episode>& episodes,
                                               const GailDiscriminator& d,
                                               double discount, PolicyReward reward) {
  if (episodes.empty()) throw ValidationError("policy step needs rollouts");
  std::vector<Eigen::VectorXd> returns;
  std::size_t longest = 0;
  for (const auto& ep : episodes) {
    const std::size_t h = ep.states.size();
    if (h == 0) throw ValidationError("policy step needs nonempty episodes");
    longest = std::max(longest, h);
    Eigen::VectorXd g(static_cast<Eigen::Index>(h));
    double acc = 0.0;
    for (std::size_t t = h; t-- > 0;) {
      acc = pair_reward(d(ep.states[t], ep.actions[t]), reward) + discount * acc;
      g(static_cast<Eigen::Index>(t)) = acc;
    }
    returns.push_back(std::move(g));
  }
  Eigen::VectorXd baseline = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(longest));
  Eigen::VectorXd count = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(longest));
  for (const auto& g : returns) {
    baseline.head(g.size()) += g;
    count.head(g.size()).array() += 1.0;
  }
  baseline = baseline.cwiseQuotient(count);
  for (auto& g : returns) g -= baseline.head(g.size());
  return returns;
}

std::pair<double, Table> gail_policy_surrogate(
    const SoftmaxPolicy& policy, const std::vector<Episode>& episodes,
    const std::vector<Eigen::VectorXd>& advantages) {
  if (episodes.empty() || episodes.size() != advantages.size()) {
    throw ValidationError("policy surrogate: episodes and advantages differ");
  }
  const double n = static_cast<double>(episodes.size());
  double value = 0.0;
  Table grad = Table::Zero(policy.n_states(), policy.n_actions());
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const auto& ep = episodes[i];
    for (std::size_t t = 0; t < ep.states.size(); ++t) {
      const double adv = advantages[i](static_cast<Eigen::Index>(t)) / n;
      if (adv == 0.0) continue;
      const int s = ep.states[t];
      const int a = ep.actions[t];
      value += adv * policy.log_prob(s, a);
      grad.row(s) -= adv * policy.probs(s).transpose();
      grad(s, a) += adv;
    }
  }
  return {value, std::move(grad)};
}

void gail_policy_step(SoftmaxPolicy& policy, const std::vector<Episode>& episodes,
                      const GailDiscriminator& d, double discount, PolicyReward reward,
                      Adam& optimizer) {
  const auto adv = policy_advantages(episodes, d, discount, reward);
  auto [value, grad] = gail_policy_surrogate(policy, episodes, adv);
  if (!grad.allFinite()) throw NumericalError("policy gradient is not finite");
  optimizer.ascend(flat(policy.logits()), flat(grad));
}

GailResult run_gail(const TabularMdp& mdp, SoftmaxPolicy policy,
                    GailDiscriminator discriminator, const Dataset& expert,
                    const GailConfig& config) {
  config.validate();
  if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions() ||
      discriminator.n_states() != mdp.n_states() ||
      discriminator.n_actions() != mdp.n_actions()) {
    throw ValidationError("run_gail: policy or discriminator does not match the MDP");
  }
  const std::vector<Pair> all_expert = expert_pairs(expert);
  if (all_expert.empty()) throw ValidationError("run_gail: no expert transitions");
  const Table rho_e = empirical_distribution(expert, SourceFilter::kExpert,
                                             mdp.n_states(), mdp.n_actions())
                          .probs;

  std::mt19937_64 rng(config.seed);
  Adam adam_d(discriminator.num_params(), {.lr = config.lr_disc});
  Adam adam_pi(policy.logits().size(), {.lr = config.lr_policy});
  LearningCurve curve;
  auto evaluate = [&](long episodes) {
    const TabularPolicy pi = policy.policy();
    curve.add(episodes, "return", policy_return(mdp, pi));
    curve.add(episodes, "kl", occupancy_divergence(mdp, pi, rho_e));
  };

  long consumed = 0;
  evaluate(consumed);
  std::vector<Pair> expert_batch;
  while (consumed + config.episodes_per_iter <= config.episodes) {
    const auto episodes =
        rollout(mdp, policy, config.episodes_per_iter, config.horizon, rng);
    consumed += config.episodes_per_iter;
    const auto policy_pairs = episode_pairs(episodes);
    for (int k = 0; k < config.disc_steps_per_iter; ++k) {
      if (config.expert_batch == 0) {
        expert_batch = all_expert;
      } else {
        std::uniform_int_distribution<std::size_t> pick(0, all_expert.size() - 1);
        expert_batch.resize(static_cast<std::size_t>(config.expert_batch));
        for (auto& p : expert_batch) p = all_expert[pick(rng)];
      }
      gail_discriminator_step(discriminator, policy_pairs, expert_batch, adam_d);
    }
    for (int k = 0; k < config.policy_steps_per_iter; ++k) {
      gail_policy_step(policy, episodes, discriminator, mdp.discount(), config.reward,
                       adam_pi);
    }
    evaluate(consumed);
  }
  return {std::move(policy), std::move(discriminator), std::move(curve)};
}

double retention(const LearningCurve& curve, double pretrained_return,
                 int evaluations) {
  if (pretrained_return == 0.0) throw ValidationError("retention: zero pretrained return");
  double worst = std::numeric_limits<double>::infinity();
  int seen = 0;
  for (const auto& [episodes, value] : curve.series("return")) {
    if (episodes == 0) continue;
    worst = std::min(worst, value / pretrained_return);
    if (++seen == evaluations) break;
  }
  if (seen == 0) throw ValidationError("retention: curve has no post-update evaluations");
  return worst;
}

int UnlearningReport::stitched_wins() const {
  int wins = 0;
  for (const auto& s : seeds) wins += s.retention_stitched >= s.retention_random ? 1 : 0;
  return wins;
}

double UnlearningReport::min_stitched_retention() const {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& s : seeds) worst = std::min(worst, s.retention_stitched);
  return worst;
}

nlohmann::json UnlearningReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : seeds) {
    rows.push_back({{"seed", s.seed},
                    {"retention_stitched", s.retention_stitched},
                    {"retention_random", s.retention_random}});
  }
  return {{"pretrained_return", pretrained_return},
          {"seeds", rows},
          {"stitched_wins", stitched_wins()},
          {"min_stitched_retention", min_stitched_retention()}};
}

UnlearningReport unlearning_experiment(const TabularMdp& mdp,
                                       const TabularPolicy& pretrained,
                                       const StitchedDiscriminator& d0,
                                       const Dataset& expert,
                                       const std::vector<std::uint64_t>& seeds,
                                       GailConfig config) {
  if (seeds.empty()) throw ValidationError("unlearning experiment needs seeds");
  const int S = mdp.n_states();
  const int A = mdp.n_actions();
  UnlearningReport report;
  report.pretrained_return = policy_return(mdp, pretrained);
  const GailDiscriminator stitched = GailDiscriminator::stitched(d0, S, A);
  for (std::uint64_t seed : seeds) {
    config.seed = seed;
    UnlearningSeed row;
    row.seed = seed;
    config.disc_init = DiscInit::kStitched;
    row.stitched = run_gail(mdp, SoftmaxPolicy::from_policy(pretrained), stitched,
                            expert, config)
                       .curve;
    config.disc_init = DiscInit::kRandom;
    const GailDiscriminator random = GailDiscriminator::random(
        S, A, d0.alpha(), d0.d_part().clip(), config.init_std, seed ^ 0xd15c);
    row.random =
        run_gail(mdp, SoftmaxPolicy::from_policy(pretrained), random, expert, config)
            .curve;
    row.retention_stitched = retention(row.stitched, report.pretrained_return);
    row.retention_random = retention(row.random, report.pretrained_return);
    report.seeds.push_back(std::move(row));
  }
  return report;
}

}  // namespace o2il
