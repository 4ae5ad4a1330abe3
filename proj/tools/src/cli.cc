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

#include "cli.h"

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <iterator>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "o2il/data.h"
#include "o2il/error.h"
#include "o2il/finetune.h"
#include "o2il/mdp.h"
#include "o2il/offrl.h"
#include "o2il/oracle.h"
#include "o2il/policy.h"
#include "o2il/reward.h"
#include "o2il/ssp.h"
#include "o2il/stitch.h"
#include "run_config.h"

extern char** environ;

namespace o2il::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
};

void add_common(CLI::App* sub, Common& common) {
  sub->add_option("--config", common.config, "key=value config file");
  sub->add_option("--set", common.sets, "override one config key (key=value)");
  sub->add_option("--out", common.out, "output directory (config key 'out')");
}

// Resolves the config, creates the output directory and snapshots the config.
RunConfig resolve(const Common& common, const std::string& command) {
  RunConfig config;
  if (!common.config.empty()) config.load_file(common.config);
  for (const auto& s : common.sets) config.assign(s);
  if (!common.out.empty()) config.set("out", common.out);
  const fs::path out = config.get("out");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw ValidationError(fmt::format("--out: cannot create '{}'", out.string()));
  std::string snapshot = "# " + command + "\n" + config.snapshot();
  std::FILE* f = std::fopen((out / "config.resolved").c_str(), "w");
  if (f == nullptr) throw ValidationError(fmt::format("cannot write {}/config.resolved", out.string()));
  std::fputs(snapshot.c_str(), f);
  std::fclose(f);
  return config;
}

fs::path out_dir(const RunConfig& config) { return config.get("out"); }

void require_file(const std::string& flag, const std::string& path) {
  if (path.empty()) throw ValidationError(fmt::format("{} is required", flag));
  if (!fs::is_regular_file(path)) {
    throw ValidationError(fmt::format("{}: no such file '{}'", flag, path));
  }
}

json nullable(const std::optional<long>& v) { return v ? json(*v) : json(nullptr); }

double optimal_return(const TabularMdp& mdp) {
  return policy_return(mdp, value_iteration(mdp, 1e-10));
}

Dataset expert_subset(const Dataset& data) {
  Dataset out;
  out.metadata = data.metadata;
  for (const auto& t : data.transitions) {
    if (t.source == Source::kExpert) out.transitions.push_back(t);
  }
  return out;
}

std::pair<int, int> dataset_shape(const Dataset& data) {
  int S = 0;
  int A = 0;
  for (const auto& t : data.transitions) {
    S = std::max({S, point_index(t.state) + 1, point_index(t.next_state) + 1});
    A = std::max(A, point_index(t.action) + 1);
  }
  return {S, A};
}

// ---------------------------------------------------------------- gen-data

int run_gen_data(const RunConfig& config) {
  const TabularMdp mdp = build_gridworld(gridworld_spec(config));
  const int S = mdp.n_states();
  const int A = mdp.n_actions();
  const auto seed = static_cast<std::uint64_t>(config.integer("seed"));
  const int horizon = static_cast<int>(config.integer("data.horizon"));
  const TabularPolicy expert = value_iteration(mdp, 1e-10);
  const Dataset expert_data =
      sample_trajectories(mdp, expert, static_cast<int>(config.integer("data.expert_traj")),
                          horizon, 2 * seed + 1, Source::kExpert, "expert");
  const Dataset random_data = sample_trajectories(
      mdp, TabularPolicy::uniform(S, A), static_cast<int>(config.integer("data.random_traj")),
      horizon, 2 * seed + 2, Source::kSupplementary, "uniform");
  const fs::path out = out_dir(config);
  save_mdp((out / "mdp.json").string(), mdp);
  write_jsonl((out / "data.jsonl").string(), merge_datasets(expert_data, random_data));
  write_json_file((out / "expert_policy.json").string(), policy_to_json(expert));
  fmt::print("gen-data: {} expert + {} random transitions, expert return {:.4f}, "
             "uniform return {:.4f}\n",
             expert_data.size(), random_data.size(), policy_return(mdp, expert),
             policy_return(mdp, TabularPolicy::uniform(S, A)));
  return kOk;
}

// ---------------------------------------------------------------- pretrain

struct PretrainArgs {
  std::string mdp;
  std::string data;
};

int run_pretrain(const RunConfig& config, const PretrainArgs& args) {
  require_file("--mdp", args.mdp);
  require_file("--data", args.data);
  const TabularMdp mdp = load_mdp(args.mdp);
  const Dataset data = read_jsonl(args.data);
  const int S = mdp.n_states();
  const int A = mdp.n_actions();
  if (data.count(Source::kExpert) == 0) {
    throw ValidationError("--data: dataset has no expert transitions");
  }
  const auto rho_e = empirical_distribution(data, SourceFilter::kExpert, S, A);
  const auto rho_o = empirical_distribution(data, SourceFilter::kAll, S, A);

  const std::string& method = config.get("reward.method");
  std::optional<DensityDiscriminator> d;
  if (method == "closed_form") {
    d = fit_discriminator_closed_form(rho_e, rho_o, reward_clip(config));
  } else if (method == "logistic") {
    LogisticFitConfig fit;
    fit.steps = static_cast<int>(config.integer("reward.steps"));
    fit.lr = config.number("reward.lr");
    fit.batch = static_cast<int>(config.integer("reward.batch"));
    fit.hidden = config.integers("reward.hidden");
    fit.seed = static_cast<std::uint64_t>(config.integer("seed"));
    fit.clip = reward_clip(config);
    d = fit_discriminator_logistic(expert_subset(data), data, FeatureMap::tabular(S, A), fit)
            .discriminator;
  } else {
    throw ValidationError(
        fmt::format("reward.method: '{}' (expected closed_form or logistic)", method));
  }
  const Table reward = auxiliary_reward(*d, S, A, config.number("reward.alpha"),
                                        config.number("reward.beta"))
                           .values;

  const double smoothing = config.number("ssp.smoothing");
  const std::string& model = config.get("ssp.model");
  SspProblem problem;
  if (model == "empirical") {
    problem = SspProblem::from_dataset(data, reward, S, A, mdp.discount(), smoothing);
  } else if (model == "true") {
    EmpiricalOptions options;
    options.smoothing = smoothing;
    problem = SspProblem::from_mdp(
        mdp, empirical_distribution(data, SourceFilter::kAll, S, A, options).probs, reward);
  } else {
    throw ValidationError(fmt::format("ssp.model: '{}' (expected empirical or true)", model));
  }
  const SspConfig ssp = ssp_config(config);
  const SspSolution sol = solve_ssp(problem, ssp, &data);

  const ExtractionConfig extraction = extraction_config(config);
  TabularPolicy policy = TabularPolicy::uniform(S, A);
  switch (extraction.method) {
    case ExtractionMethod::kClosedForm:
      policy = extract_policy_closed_form(problem.rho_o, sol.dual.y);
      break;
    case ExtractionMethod::kWeightedBc:
      policy = extract_policy_weighted_bc(data, sol.dual.y, SoftmaxPolicy(S, A), extraction)
                   .policy();
      break;
    case ExtractionMethod::kReverseKl: {
      std::vector<bool> visited(static_cast<std::size_t>(S));
      for (int s = 0; s < S; ++s) visited[static_cast<std::size_t>(s)] = rho_e.probs.row(s).sum() > 0.0;
      policy = extract_policy_reverse_kl(reverse_kl_target(rho_e.probs, sol.dual.y, *d),
                                         visited);
      break;
    }
    case ExtractionMethod::kPlainBc:
      policy = plain_bc(data, S, A);
      break;
  }

  const fs::path out = out_dir(config);
  write_json_file((out / "discriminator.json").string(), d->to_json());
  write_json_file((out / "dual.json").string(), dual_to_json(sol.dual));
  write_json_file((out / "policy.json").string(), policy_to_json(policy));
  sol.diagnostics.write_csv((out / "ssp_diagnostics.csv").string());

  json summary = {{"iterations", sol.diagnostics.iterations_run},
                  {"converged", sol.diagnostics.converged},
                  {"kkt_residual", kkt_residual(problem, sol.dual, ssp)},
                  {"clamp_count", sol.diagnostics.clamp_count}};
  if (mdp.has_reward()) {
    const double ret = policy_return(mdp, policy);
    const double best = optimal_return(mdp);
    summary["return"] = ret;
    summary["optimal_return"] = best;
    summary["return_ratio"] = ret / best;
    fmt::print("pretrain: return {:.4f} ({:.1f}% of optimal), {} SSP iterations\n", ret,
               100.0 * ret / best, sol.diagnostics.iterations_run);
  }
  write_json_file((out / "pretrain.json").string(), summary);
  return kOk;
}

// ---------------------------------------------------------------- stitch

struct StitchArgs {
  std::string discriminator;
  std::string dual;
  std::optional<double> alpha;
};

int run_stitch(const RunConfig& config, const StitchArgs& args) {
  const auto start = std::chrono::steady_clock::now();
  require_file("--discriminator", args.discriminator);
  require_file("--dual", args.dual);
  const double lo = config.number("stitch.clip_lo");
  const DensityDiscriminator d =
      DensityDiscriminator::from_json(read_json_file(args.discriminator))
          .with_clip({lo, 1.0 - lo});
  const DualVariables dual = dual_from_json(read_json_file(args.dual));
  const double alpha = args.alpha.value_or(config.number("ssp.alpha"));
  const StitchedDiscriminator stitched = StitchedDiscriminator::tabular(d, dual.y, alpha);
  const fs::path out = out_dir(config);
  write_json_file((out / "stitched.json").string(), stitched.to_json());
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_json_file((out / "stitch.json").string(), {{"elapsed_seconds", elapsed}});
  fmt::print("stitch: wrote {} in {:.3f} s\n", (out / "stitched.json").string(), elapsed);
  return kOk;
}

// ---------------------------------------------------------------- finetune

struct FinetuneArgs {
  std::string mdp;
  std::string policy;
  std::string expert;
  std::string stitched;
  std::string disc_init;
};

int run_finetune(const RunConfig& config, const FinetuneArgs& args) {
  require_file("--mdp", args.mdp);
  require_file("--policy", args.policy);
  require_file("--expert", args.expert);
  const DiscInit init = parse_disc_init(args.disc_init);
  const TabularMdp mdp = load_mdp(args.mdp);
  const int S = mdp.n_states();
  const int A = mdp.n_actions();
  const TabularPolicy start = policy_from_json(read_json_file(args.policy));
  if (start.n_states() != S || start.n_actions() != A) {
    throw ValidationError("--policy: shape does not match --mdp");
  }
  const Dataset expert = expert_subset(read_jsonl(args.expert));
  GailConfig gail = gail_config(config);
  gail.disc_init = init;

  std::optional<GailDiscriminator> d;
  if (init == DiscInit::kRandom) {
    const double lo = config.number("stitch.clip_lo");
    d = GailDiscriminator::random(S, A, config.number("ssp.alpha"), {lo, 1.0 - lo},
                                  gail.init_std, gail.seed ^ 0xd15cULL);
  } else {
    require_file("--stitched", args.stitched);
    const StitchedDiscriminator st =
        StitchedDiscriminator::from_json(read_json_file(args.stitched));
    d = init == DiscInit::kStitched
            ? GailDiscriminator::stitched(st, S, A)
            : GailDiscriminator::from_table(st.table(S, A), st.alpha(), st.d_part().clip());
  }

  const GailResult result =
      run_gail(mdp, SoftmaxPolicy::from_policy(start), *d, expert, gail);
  const fs::path out = out_dir(config);
  result.curve.write_csv((out / "curve.csv").string());
  result.curve.write_svg((out / "curve_return.svg").string(), "return");
  result.curve.write_svg((out / "curve_kl.svg").string(), "kl");
  write_json_file((out / "policy.json").string(), policy_to_json(result.policy.policy()));
  write_json_file((out / "discriminator.json").string(), result.discriminator.to_json());

  const double best = optimal_return(mdp);
  const auto returns = result.curve.series("return");
  json summary = {{"disc_init", to_string(init)},
                  {"episodes", returns.back().first},
                  {"initial_return", returns.front().second},
                  {"final_return", returns.back().second},
                  {"optimal_return", best},
                  {"first_reaching_95", nullable(result.curve.first_reaching(
                                            "return", 0.95 * best))}};
  write_json_file((out / "finetune.json").string(), summary);
  fmt::print("finetune ({}): return {:.4f} -> {:.4f} over {} episodes\n", to_string(init),
             returns.front().second, returns.back().second, returns.back().first);
  return kOk;
}

// ---------------------------------------------------------------- oracle-check

int run_oracle_check(const RunConfig& config, const std::string& fixtures) {
  if (fixtures.empty()) throw ValidationError("--fixtures is required");
  if (!fs::is_directory(fixtures)) {
    throw ValidationError(fmt::format("--fixtures: no such directory '{}'", fixtures));
  }
  const std::vector<Fixture> all = load_fixture_dir(fixtures);
  if (all.empty()) throw ValidationError(fmt::format("--fixtures: no fixtures in '{}'", fixtures));
  const double tol = config.number("oracle.tolerance");
  const fs::path out = out_dir(config);
  std::FILE* csv = std::fopen((out / "oracle_check.csv").c_str(), "w");
  if (csv == nullptr) throw ValidationError("cannot write oracle_check.csv");
  std::fputs("fixture,alpha,dual,primal,gap,kkt,flow_l1,iterations\n", csv);
  int failures = 0;
  int checks = 0;
  double worst = 0.0;
  for (const Fixture& f : all) {
    for (double alpha : config.numbers("oracle.alphas")) {
      const OracleCheck c = oracle_check(f, alpha);
      std::fputs(fmt::format("{},{},{:.17g},{:.17g},{:.6e},{:.6e},{:.6e},{}\n", c.fixture,
                             c.alpha, c.dual_value, c.primal_value, c.gap, c.kkt, c.flow_l1,
                             c.iterations)
                     .c_str(),
                 csv);
      ++checks;
      worst = std::max(worst, std::abs(c.gap));
      if (!(std::abs(c.gap) <= tol) || c.gap < -1e-9 || !c.converged) ++failures;
    }
  }
  std::fclose(csv);
  fmt::print("oracle-check: {} fixtures, {} checks, max |gap| {:.3e}\n", all.size(), checks,
             worst);
  if (failures > 0) {
    throw NumericalError(
        fmt::format("oracle-check: {} of {} checks outside tolerance {}", failures, checks, tol));
  }
  return kOk;
}

// ---------------------------------------------------------------- offrl

struct OffRlArgs {
  std::string data;
  std::string mdp;
};

int run_offrl(const RunConfig& config, const OffRlArgs& args) {
  require_file("--data", args.data);
  std::optional<TabularMdp> mdp;
  if (!args.mdp.empty()) {
    require_file("--mdp", args.mdp);
    mdp = load_mdp(args.mdp);
  }
  const Dataset data = read_jsonl(args.data);
  const auto [S, A] = mdp ? std::pair{mdp->n_states(), mdp->n_actions()} : dataset_shape(data);
  const OffRlConfig off = offrl_config(config);
  const TabularMdp* model = mdp ? &*mdp : nullptr;
  const SspProblem problem = offline_rl_problem(data, S, A, off, model);
  const SspSolution sol = solve_offline_rl(data, S, A, off, model);
  const TabularPolicy policy = extract_offline_rl_policy(problem.rho_o, sol.dual.y);

  const fs::path out = out_dir(config);
  write_json_file((out / "dual.json").string(), dual_to_json(sol.dual));
  write_json_file((out / "policy.json").string(), policy_to_json(policy));
  json summary = {{"alpha", off.alpha},
                  {"iterations", sol.diagnostics.iterations_run},
                  {"converged", sol.diagnostics.converged}};
  if (mdp && mdp->has_reward()) {
    const double ret = policy_return(*mdp, policy);
    summary["return"] = ret;
    summary["kl_to_data"] = occupancy_divergence(*mdp, policy, problem.rho_o);
    fmt::print("offrl: alpha {} return {:.4f}\n", off.alpha, ret);
  }
  write_json_file((out / "offrl.json").string(), summary);
  return kOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string mdp;
  std::string policy;
  std::string expert;
};

int run_eval(const RunConfig& config, const EvalArgs& args) {
  require_file("--mdp", args.mdp);
  require_file("--policy", args.policy);
  const TabularMdp mdp = load_mdp(args.mdp);
  const TabularPolicy policy = policy_from_json(read_json_file(args.policy));
  json report;
  if (mdp.has_reward()) {
    const double ret = policy_return(mdp, policy);
    const double best = optimal_return(mdp);
    report["return"] = ret;
    report["optimal_return"] = best;
    report["return_ratio"] = ret / best;
  }
  if (!args.expert.empty()) {
    require_file("--expert", args.expert);
    const Dataset data = read_jsonl(args.expert);
    const Table rho_e =
        empirical_distribution(data, SourceFilter::kExpert, mdp.n_states(), mdp.n_actions())
            .probs;
    const double kl = occupancy_divergence(mdp, policy, rho_e);
    report["kl_expert"] = std::isfinite(kl) ? json(kl) : json("inf");
  }
  write_json_file((out_dir(config) / "eval.json").string(), report);
  fmt::print("{}\n", report.dump(2));
  return kOk;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  std::vector<std::string> curves;
  std::vector<std::string> metrics{"return"};
  std::optional<double> level;
};

int run_report(const RunConfig& config, const ReportArgs& args) {
  if (args.curves.empty()) throw ValidationError("--curve is required");
  const fs::path out = out_dir(config);
  json report = json::object();
  for (const auto& path : args.curves) {
    require_file("--curve", path);
    const LearningCurve curve = LearningCurve::read_csv(path);
    const std::string stem = fs::path(path).parent_path().filename().string() + "_" +
                             fs::path(path).stem().string();
    json entry = json::object();
    for (const auto& metric : args.metrics) {
      const auto series = curve.series(metric);
      if (series.empty()) {
        throw ValidationError(fmt::format("--curve {}: no '{}' points", path, metric));
      }
      curve.write_svg((out / fmt::format("{}_{}.svg", stem, metric)).string(), metric);
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (const auto& [e, v] : series) {
        if (!std::isfinite(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      json m = {{"first", series.front().second},
                {"last", series.back().second},
                {"min", lo},
                {"max", hi},
                {"episodes", series.back().first}};
      if (args.level) m["first_reaching"] = nullable(curve.first_reaching(metric, *args.level));
      entry[metric] = m;
    }
    report[path] = entry;
  }
  write_json_file((out / "report.json").string(), report);
  fmt::print("report: {} curve(s) -> {}\n", args.curves.size(), out.string());
  return kOk;
}

// ---------------------------------------------------------------- sweep

struct SweepArgs {
  int jobs = 1;
  std::string seeds = "0";
};

std::string self_path(const std::string& argv0) {
  std::error_code ec;
  const fs::path p = fs::read_symlink("/proc/self/exe", ec);
  return ec ? argv0 : p.string();
}

int run_sweep(const RunConfig& config, const SweepArgs& args,
              const std::vector<std::string>& command, const std::string& argv0) {
  if (command.empty()) throw ValidationError("sweep: missing subcommand after '--'");
  if (command.front() == "sweep") throw ValidationError("sweep: cannot nest sweeps");
  if (args.jobs < 1) throw ValidationError("--jobs must be >= 1");
  std::deque<long> pending;
  std::stringstream ss(args.seeds);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      pending.push_back(std::stol(item));
    } catch (const std::logic_error&) {
      throw ValidationError(fmt::format("--seeds: '{}' is not an integer", item));
    }
  }
  const std::string exe = self_path(argv0);
  const fs::path out = out_dir(config);

  std::map<pid_t, long> running;
  int worst = kOk;
  auto launch = [&](long seed) {
    const fs::path dir = out / fmt::format("seed_{}", seed);
    fs::create_directories(dir);
    std::vector<std::string> argv_s{exe};
    argv_s.insert(argv_s.end(), command.begin(), command.end());
    argv_s.insert(argv_s.end(), {"--set", fmt::format("seed={}", seed), "--out", dir.string()});
    std::vector<char*> argv_c;
    for (auto& s : argv_s) argv_c.push_back(s.data());
    argv_c.push_back(nullptr);
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    const std::string log = (dir / "log.txt").string();
    posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, log.c_str(),
                                     O_WRONLY | O_CREAT | O_TRUNC, 0644);
    posix_spawn_file_actions_adddup2(&actions, STDOUT_FILENO, STDERR_FILENO);
    pid_t pid = 0;
    const int rc = posix_spawn(&pid, exe.c_str(), &actions, nullptr, argv_c.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    if (rc != 0) throw ValidationError(fmt::format("sweep: cannot launch {}", exe));
    running[pid] = seed;
  };
  while (!pending.empty() || !running.empty()) {
    while (!pending.empty() && static_cast<int>(running.size()) < args.jobs) {
      launch(pending.front());
      pending.pop_front();
    }
    int status = 0;
    const pid_t pid = waitpid(-1, &status, 0);
    if (pid < 0) break;
    const long seed = running[pid];
    running.erase(pid);
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : kNumericalFailure;
    fmt::print("sweep: seed {} exited with {}\n", seed, code);
    worst = std::max(worst, code);
  }
  return worst;
}

int dispatch(const std::vector<std::string>& raw) {
  CLI::App app{"Offline-to-online imitation learning on tabular MDPs", "o2il"};
  app.require_subcommand(1);

  Common c_gen, c_pre, c_sti, c_fin, c_ora, c_off, c_eval, c_rep, c_swp;
  PretrainArgs pre;
  StitchArgs sti;
  FinetuneArgs fin;
  std::string fixtures;
  OffRlArgs off;
  EvalArgs ev;
  ReportArgs rep;
  SweepArgs swp;
  double stitch_alpha = 0.0;

  auto* gen = app.add_subcommand("gen-data", "build the gridworld and sample datasets");
  add_common(gen, c_gen);

  auto* pretrain = app.add_subcommand("pretrain", "reward, dual solve and policy extraction");
  add_common(pretrain, c_pre);
  pretrain->add_option("--mdp", pre.mdp, "MDP json")->required();
  pretrain->add_option("--data", pre.data, "dataset jsonl")->required();

  auto* stitch = app.add_subcommand("stitch", "assemble the stitched discriminator");
  add_common(stitch, c_sti);
  stitch->add_option("--discriminator", sti.discriminator, "density discriminator json")
      ->required();
  stitch->add_option("--dual", sti.dual, "dual variables json")->required();
  auto* alpha_opt = stitch->add_option("--alpha", stitch_alpha, "KL weight");

  auto* finetune = app.add_subcommand("finetune", "online GAIL finetuning");
  add_common(finetune, c_fin);
  finetune->add_option("--mdp", fin.mdp, "MDP json")->required();
  finetune->add_option("--policy", fin.policy, "initial policy json")->required();
  finetune->add_option("--expert", fin.expert, "dataset jsonl with expert transitions")
      ->required();
  finetune->add_option("--stitched", fin.stitched, "stitched discriminator json");
  finetune->add_option("--disc-init", fin.disc_init, "stitched, random or table")
      ->required()
      ->check(CLI::IsMember({"stitched", "random", "table"}));

  auto* oracle = app.add_subcommand("oracle-check", "dual solve against the primal oracle");
  add_common(oracle, c_ora);
  oracle->add_option("--fixtures", fixtures, "fixture directory")->required();

  auto* offrl = app.add_subcommand("offrl", "reward-regularized offline RL");
  add_common(offrl, c_off);
  offrl->add_option("--data", off.data, "dataset jsonl with rewards")->required();
  offrl->add_option("--mdp", off.mdp, "MDP json (optional model and reward)");

  auto* eval = app.add_subcommand("eval", "exact return and occupancy divergence");
  add_common(eval, c_eval);
  eval->add_option("--mdp", ev.mdp, "MDP json")->required();
  eval->add_option("--policy", ev.policy, "policy json")->required();
  eval->add_option("--expert", ev.expert, "dataset jsonl for KL to expert occupancy");

  auto* report = app.add_subcommand("report", "plot and summarize learning curves");
  add_common(report, c_rep);
  report->add_option("--curve", rep.curves, "curve csv (repeatable)")->required();
  report->add_option("--metric", rep.metrics, "metric name (repeatable)");
  report->add_option("--level", rep.level, "report the first episode reaching this value");

  auto* sweep = app.add_subcommand("sweep", "run a subcommand over seeds: sweep [opts] -- cmd");
  add_common(sweep, c_swp);
  sweep->add_option("--jobs", swp.jobs, "parallel processes");
  sweep->add_option("--seeds", swp.seeds, "comma-separated seeds");
  sweep->allow_extras();

  // Everything after "--" is the command a sweep runs.
  const auto split = std::find(raw.begin() + 1, raw.end(), std::string("--"));
  const std::vector<std::string> tail(split == raw.end() ? raw.end() : split + 1, raw.end());
  std::vector<std::string> args(std::make_reverse_iterator(split), raw.rend() - 1);
  if (split != raw.end() && !std::count(raw.begin(), split, std::string("sweep"))) {
    fmt::print(stderr, "error: '--' is only accepted by sweep\n");
    return kValidationFailure;
  }
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    fmt::print("{}", app.help());
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    fmt::print("{}", app.help("", CLI::AppFormatMode::All));
    return kOk;
  } catch (const CLI::ParseError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kValidationFailure;
  }

  if (gen->parsed()) return run_gen_data(resolve(c_gen, "gen-data"));
  if (pretrain->parsed()) return run_pretrain(resolve(c_pre, "pretrain"), pre);
  if (stitch->parsed()) {
    if (alpha_opt->count() > 0) sti.alpha = stitch_alpha;
    return run_stitch(resolve(c_sti, "stitch"), sti);
  }
  if (finetune->parsed()) return run_finetune(resolve(c_fin, "finetune"), fin);
  if (oracle->parsed()) return run_oracle_check(resolve(c_ora, "oracle-check"), fixtures);
  if (offrl->parsed()) return run_offrl(resolve(c_off, "offrl"), off);
  if (eval->parsed()) return run_eval(resolve(c_eval, "eval"), ev);
  if (report->parsed()) return run_report(resolve(c_rep, "report"), rep);
  if (sweep->parsed()) {
    std::vector<std::string> command = sweep->remaining();
    command.insert(command.end(), tail.begin(), tail.end());
    return run_sweep(resolve(c_swp, "sweep"), swp, command, raw.front());
  }
  return kValidationFailure;
}

}  // namespace

int command_dispatch(const std::vector<std::string>& args) {
  if (args.empty()) return kValidationFailure;
  try {
    return dispatch(args);
  } catch (const ValidationError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kValidationFailure;
  } catch (const NumericalError& e) {
    fmt::print(stderr, "numerical failure: {}\n", e.what());
    return kNumericalFailure;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kValidationFailure;
  }
}

int command_dispatch(int argc, const char* const* argv) {
  return command_dispatch(std::vector<std::string>(argv, argv + argc));
}

}  // namespace o2il::cli
