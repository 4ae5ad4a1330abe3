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

#include "o2il/data.h"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "o2il/error.h"
#include "test_support.h"

namespace o2il {
namespace {

namespace fs = std::filesystem;

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "o2il_data_test";
  fs::create_directories(dir);
  return dir / name;
}

Transition pair(int s, int a, bool start = true, Source src = Source::kExpert) {
  return {s, a, s, start, src, std::nullopt};
}

TEST(SampleTrajectories, SingleState) {
  const TabularMdp mdp = oracles::one_state_mdp(Eigen::VectorXd::Zero(1), 0.9);
  const Dataset d = sample_trajectories(mdp, TabularPolicy::uniform(1, 1), 1, 3, 0,
                                        Source::kExpert);
  ASSERT_EQ(d.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(point_index(d.transitions[i].state), 0);
    EXPECT_EQ(point_index(d.transitions[i].action), 0);
    EXPECT_EQ(point_index(d.transitions[i].next_state), 0);
    EXPECT_EQ(d.transitions[i].is_episode_start, i == 0);
  }
}

TEST(SampleTrajectories, ExpertReachesGoalInOneStep) {
  const GridworldSpec spec{2, 1, {1, 0}, 0.0, -0.01, 0.9};
  const TabularMdp mdp = build_gridworld(spec);
  const TabularPolicy expert = value_iteration(mdp, 1e-10);
  const Dataset d = sample_trajectories(mdp, expert, 20, 1, 4, Source::kExpert);
  const int goal = gridworld_state(spec, spec.goal);
  for (const auto& t : d.transitions) EXPECT_EQ(point_index(t.next_state), goal);
}

TEST(SampleTrajectories, SameSeedSameBytes) {
  const TabularMdp mdp = build_gridworld({});
  const TabularPolicy pi = TabularPolicy::uniform(64, 4);
  const Dataset a = sample_trajectories(mdp, pi, 7, 30, 42, Source::kSupplementary, "u");
  const Dataset b = sample_trajectories(mdp, pi, 7, 30, 42, Source::kSupplementary, "u");
  EXPECT_TRUE(a == b);
  write_jsonl(temp_path("a.jsonl").string(), a);
  write_jsonl(temp_path("b.jsonl").string(), b);
  std::ifstream fa(temp_path("a.jsonl")), fb(temp_path("b.jsonl"));
  const std::string sa((std::istreambuf_iterator<char>(fa)), {});
  const std::string sb((std::istreambuf_iterator<char>(fb)), {});
  EXPECT_EQ(sa, sb);
}

TEST(SampleTrajectories, RejectsBadArguments) {
  const TabularMdp mdp = build_gridworld({});
  EXPECT_THROW(sample_trajectories(mdp, TabularPolicy::uniform(64, 4), 0, 5, 0,
                                   Source::kExpert),
               ValidationError);
  EXPECT_THROW(sample_trajectories(mdp, TabularPolicy::uniform(64, 4), 1, 0, 0,
                                   Source::kExpert),
               ValidationError);
}

TEST(EmpiricalDistribution, SingleTransition) {
  Dataset d;
  d.transitions = {pair(0, 1)};
  const EmpiricalDistribution e = empirical_distribution(d, SourceFilter::kAll, 2, 2);
  EXPECT_EQ(e.probs(0, 1), 1.0);
  EXPECT_EQ(e.probs.sum(), 1.0);
  EXPECT_TRUE(e.support(0, 1));
  EXPECT_FALSE(e.support(0, 0));
}

TEST(EmpiricalDistribution, TwoDistinctPairs) {
  Dataset d;
  d.transitions = {pair(0, 1), pair(1, 0, false)};
  const EmpiricalDistribution e = empirical_distribution(d, SourceFilter::kAll, 2, 2);
  EXPECT_EQ(e.probs(0, 1), 0.5);
  EXPECT_EQ(e.probs(1, 0), 0.5);
}

TEST(EmpiricalDistribution, MatchesChainFrequency) {
  // Two-state chain under a fixed policy: the long-run visitation frequency
  // is the stationary vector of the state kernel.
  Eigen::MatrixXd T(4, 2);
  T << 0.9, 0.1, 0.2, 0.8, 0.3, 0.7, 0.6, 0.4;
  const TabularMdp mdp(2, 2, T, Eigen::Vector2d(1.0, 0.0), 0.99);
  Table p(2, 2);
  p << 0.25, 0.75, 0.6, 0.4;
  const TabularPolicy pi(p);
  const Dataset d = sample_trajectories(mdp, pi, 1, 10000, 17, Source::kExpert);
  const EmpiricalDistribution e = empirical_distribution(d, SourceFilter::kAll, 2, 2);

  Eigen::Matrix2d K = Eigen::Matrix2d::Zero();
  for (int s = 0; s < 2; ++s) {
    for (int a = 0; a < 2; ++a) K.row(s) += p(s, a) * T.row(s * 2 + a);
  }
  // Solve x K = x with x summing to one.
  const double x0 = K(1, 0) / (K(0, 1) + K(1, 0));
  const Eigen::Vector2d x(x0, 1.0 - x0);
  Table ref(2, 2);
  for (int s = 0; s < 2; ++s) ref.row(s) = x(s) * p.row(s);
  EXPECT_LE((e.probs - ref).cwiseAbs().sum(), 0.05);
}

TEST(EmpiricalDistribution, OrderInvariantAndNormalized) {
  const TabularMdp mdp = build_gridworld({4, 4, {3, 3}, 0.1, -0.01, 0.99});
  Dataset d = sample_trajectories(mdp, TabularPolicy::uniform(16, 4), 10, 20, 1,
                                  Source::kExpert);
  const EmpiricalDistribution a = empirical_distribution(d, SourceFilter::kAll, 16, 4);
  std::mt19937_64 rng(2);
  std::shuffle(d.transitions.begin(), d.transitions.end(), rng);
  const EmpiricalDistribution b = empirical_distribution(d, SourceFilter::kAll, 16, 4);
  EXPECT_EQ(a.probs, b.probs);
  EXPECT_NEAR(a.probs.sum(), 1.0, 1e-12);
  EXPECT_GE(a.probs.minCoeff(), 0.0);
}

TEST(EmpiricalDistribution, EmptyFilterIsAnError) {
  Dataset d;
  d.transitions = {pair(0, 0)};
  EXPECT_THROW(empirical_distribution(d, SourceFilter::kSupplementary, 1, 1),
               ValidationError);
}

TEST(MergeDatasets, EmptySupplementary) {
  const TabularMdp mdp = build_gridworld({});
  const Dataset e = sample_trajectories(mdp, TabularPolicy::uniform(64, 4), 2, 5, 0,
                                        Source::kExpert);
  const Dataset merged = merge_datasets(e, Dataset{});
  EXPECT_EQ(merged.transitions, e.transitions);
}

TEST(MergeDatasets, SizesAddAndProvenanceIsKept) {
  const TabularMdp mdp = build_gridworld({});
  const Dataset e = sample_trajectories(mdp, TabularPolicy::uniform(64, 4), 1, 3, 0,
                                        Source::kExpert);
  const Dataset s = sample_trajectories(mdp, TabularPolicy::uniform(64, 4), 1, 5, 1,
                                        Source::kSupplementary);
  const Dataset o = merge_datasets(e, s);
  EXPECT_EQ(o.size(), 8u);
  EXPECT_EQ(o.count(Source::kExpert), 3u);
  EXPECT_EQ(o.count(Source::kSupplementary), 5u);
}

TEST(MergeDatasets, KindMismatch) {
  Dataset e;
  e.transitions = {pair(0, 0)};
  Dataset s;
  s.transitions = {{std::vector<double>{0.5}, std::vector<double>{0.1},
                    std::vector<double>{0.4}, true, Source::kSupplementary, std::nullopt}};
  EXPECT_THROW(merge_datasets(e, s), ValidationError);
}

TEST(MergeDatasets, ExpertSupportInsideUnionSupport) {
  const TabularMdp mdp = build_gridworld({4, 4, {3, 3}, 0.1, -0.01, 0.99});
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const Dataset e = sample_trajectories(mdp, oracles::random_policy(16, 4, rng), 2, 10,
                                          trial, Source::kExpert);
    const Dataset s = sample_trajectories(mdp, oracles::random_policy(16, 4, rng), 3, 10,
                                          1000 + trial, Source::kSupplementary);
    const Dataset o = merge_datasets(e, s);
    const Mask se = empirical_distribution(o, SourceFilter::kExpert, 16, 4).support;
    const Mask so = empirical_distribution(o, SourceFilter::kAll, 16, 4).support;
    for (Eigen::Index i = 0; i < se.size(); ++i) {
      if (se.data()[i]) EXPECT_TRUE(so.data()[i]);
    }
  }
}

TEST(MergeDatasets, AssociativeUpToOrder) {
  const TabularMdp mdp = build_gridworld({});
  const TabularPolicy pi = TabularPolicy::uniform(64, 4);
  const Dataset a = sample_trajectories(mdp, pi, 1, 4, 0, Source::kExpert);
  const Dataset b = sample_trajectories(mdp, pi, 1, 4, 1, Source::kSupplementary);
  const Dataset c = sample_trajectories(mdp, pi, 1, 4, 2, Source::kSupplementary);
  const Dataset left = merge_datasets(merge_datasets(a, b), c);
  const Dataset right = merge_datasets(a, merge_datasets(b, c));
  EXPECT_EQ(left.transitions, right.transitions);
}

TEST(InitialDistribution, AllStartAtZero) {
  Dataset d;
  d.transitions = {pair(0, 0), pair(1, 0, false), pair(0, 0)};
  const Eigen::VectorXd mu = estimate_initial_distribution(d, 2);
  EXPECT_EQ(mu(0), 1.0);
  EXPECT_EQ(mu(1), 0.0);
}

TEST(InitialDistribution, EvenSplit) {
  Dataset d;
  d.transitions = {pair(0, 0), pair(0, 0), pair(1, 0), pair(1, 0)};
  const Eigen::VectorXd mu = estimate_initial_distribution(d, 2);
  EXPECT_EQ(mu(0), 0.5);
  EXPECT_EQ(mu(1), 0.5);
}

TEST(InitialDistribution, MonteCarloConcentration) {
  Eigen::MatrixXd T = Eigen::MatrixXd::Constant(2, 2, 0.5);
  const TabularMdp mdp(2, 1, T, Eigen::Vector2d(0.3, 0.7), 0.9);
  const Dataset d = sample_trajectories(mdp, TabularPolicy::uniform(2, 1), 1000, 2, 5,
                                        Source::kExpert);
  const Eigen::VectorXd mu = estimate_initial_distribution(d, 2);
  EXPECT_LE(std::abs(mu(0) - 0.3), 0.05);
  EXPECT_LE(std::abs(mu(1) - 0.7), 0.05);
}

TEST(InitialDistribution, NoStarts) {
  Dataset d;
  d.transitions = {pair(0, 0, false)};
  EXPECT_THROW(estimate_initial_distribution(d, 1), ValidationError);
}

TEST(DatasetIo, RoundTrip) {
  const TabularMdp mdp = build_gridworld({});
  Dataset d = merge_datasets(
      sample_trajectories(mdp, TabularPolicy::uniform(64, 4), 3, 10, 0, Source::kExpert),
      sample_trajectories(mdp, TabularPolicy::uniform(64, 4), 3, 10, 1,
                          Source::kSupplementary));
  d.transitions.push_back({std::vector<double>{0.25, -1.5}, std::vector<double>{0.125},
                           std::vector<double>{1e-300, 3.0}, true, Source::kExpert, 0.1});
  const std::string path = temp_path("roundtrip.jsonl").string();
  write_jsonl(path, d);
  const Dataset back = read_jsonl(path);
  EXPECT_EQ(back.transitions, d.transitions);
}

TEST(DatasetIo, EmptyFile) {
  const std::string path = temp_path("empty.jsonl").string();
  std::ofstream(path).close();
  EXPECT_THROW(read_jsonl(path), ValidationError);
}

TEST(DatasetIo, MalformedLineNamesTheLine) {
  const std::string path = temp_path("bad.jsonl").string();
  {
    std::ofstream out(path);
    out << R"({"s":0,"a":0,"sn":1,"start":true,"src":"e"})" << "\n";
    out << R"({"s":0,"a":0,"sn":1,"start":true,"src":"e","extra":1})" << "\n";
  }
  try {
    read_jsonl(path);
    FAIL() << "expected an error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
}

TEST(DatasetIo, ReadsLargeFileQuickly) {
  const TabularMdp mdp = build_gridworld({});
  const Dataset d = sample_trajectories(mdp, TabularPolicy::uniform(64, 4), 1000, 100, 3,
                                        Source::kSupplementary);
  ASSERT_EQ(d.size(), 100000u);
  const std::string path = temp_path("large.jsonl").string();
  write_jsonl(path, d);
  const auto start = std::chrono::steady_clock::now();
  const Dataset back = read_jsonl(path);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_EQ(back.size(), d.size());
  EXPECT_LT(seconds, 2.0);
}

}  // namespace
}  // namespace o2il
