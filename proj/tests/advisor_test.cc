/* Copyright 2026 The Rafiki Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "rafiki/advisor.h"

#include <cmath>

#include <gtest/gtest.h>

#include "oracles.h"
#include "rafiki/gp.h"
#include "rafiki/tune.h"

namespace rafiki {
namespace {

HyperSpace Space() {
  return *HyperSpace::Build(SurrogateKnobs(), HookRegistry::WithBuiltins());
}

HyperSpace Grid(int n) {
  std::vector<KnobValue> v;
  for (int i = 0; i < n; ++i) v.push_back(int64_t{i});
  return *HyperSpace::Build({*DefineChoice("x", v)}, HookRegistry::WithBuiltins());
}

TEST(RandomSearch, NextIsValid) {
  auto space = Space();
  RandomSearchAdvisor adv(space, 1);
  for (int w = 0; w < 5; ++w) {
    auto t = adv.Next(w);
    ASSERT_TRUE(t.has_value());
    EXPECT_TRUE(space.IsValid(t->assignment));
    EXPECT_EQ(t->trial_id, w);
  }
}

TEST(BayesOpt, NoGpFitDuringWarmup) {
  auto space = Space();
  BayesOptAdvisor adv(space, 1, {GpConfig{}, 5, 100});
  for (int i = 0; i < 5; ++i) {
    auto t = adv.Next(0);
    ASSERT_TRUE(t.has_value());
    ASSERT_TRUE(adv.Collect(0, 0.1 * i, *t).ok());
  }
  EXPECT_EQ(adv.gp_fit_count(), 0);
  ASSERT_TRUE(adv.Next(0).has_value());
  EXPECT_EQ(adv.gp_fit_count(), 1);
}

TEST(Advisor, FiniteGridExhausts) {
  auto space = Grid(4);
  RandomSearchAdvisor adv(space, 3);
  std::set<int64_t> seen;
  for (int i = 0; i < 4; ++i) {
    auto t = adv.Next(0);
    ASSERT_TRUE(t.has_value());
    seen.insert(std::get<int64_t>(t->assignment.at("x")));
    ASSERT_TRUE(adv.Collect(0, 0.5, *t).ok());
  }
  EXPECT_EQ(seen.size(), 4u);
  EXPECT_FALSE(adv.Next(0).has_value());
}

TEST(Advisor, CollectUnknownTrial) {
  auto space = Space();
  RandomSearchAdvisor adv(space, 1);
  Trial bogus;
  bogus.trial_id = 42;
  EXPECT_EQ(adv.Collect(0, 0.5, bogus).code(), absl::StatusCode::kNotFound);
}

TEST(BestTrial, SingleCollect) {
  auto space = Space();
  RandomSearchAdvisor adv(space, 1);
  auto t = adv.Next(0);
  ASSERT_TRUE(adv.Collect(0, 0.9, *t).ok());
  EXPECT_EQ(adv.BestTrial()->trial.trial_id, t->trial_id);
  EXPECT_EQ(adv.BestTrial()->p, 0.9);
}

TEST(BestTrial, LaterBetterWins) {
  auto space = Space();
  RandomSearchAdvisor adv(space, 1);
  auto a = adv.Next(0);
  ASSERT_TRUE(adv.Collect(0, 0.3, *a).ok());
  auto b = adv.Next(0);
  ASSERT_TRUE(adv.Collect(0, 0.8, *b).ok());
  EXPECT_EQ(adv.BestTrial()->trial.trial_id, b->trial_id);
}

TEST(BestTrial, TieGoesToEarliest) {
  auto space = Space();
  RandomSearchAdvisor adv(space, 1);
  auto a = adv.Next(0);
  auto b = adv.Next(1);
  ASSERT_TRUE(adv.Collect(1, 0.5, *b).ok());
  ASSERT_TRUE(adv.Collect(0, 0.5, *a).ok());
  EXPECT_EQ(adv.BestTrial()->trial.trial_id, a->trial_id);
}

TEST(BestTrial, EmptyIsNotFound) {
  auto space = Space();
  RandomSearchAdvisor adv(space, 1);
  EXPECT_EQ(adv.BestTrial().status().code(), absl::StatusCode::kNotFound);
}

TEST(BestTrial, MatchesLinearScan) {
  auto space = Space();
  RandomSearchAdvisor adv(space, 1);
  Rng rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<int64_t, double>> log;
  for (int i = 0; i < 100; ++i) {
    auto t = adv.Next(i % 7);
    const double p = std::round(u(rng) * 50) / 50;  // forces ties
    ASSERT_TRUE(adv.Collect(i % 7, p, *t).ok());
    log.emplace_back(t->trial_id, p);
  }
  int64_t best_id = -1;
  double best_p = -1;
  for (const auto& [id, p] : log) {
    if (p > best_p || (p == best_p && id < best_id)) {
      best_p = p;
      best_id = id;
    }
  }
  EXPECT_EQ(adv.BestTrial()->trial.trial_id, best_id);
}

TEST(IsBest, SingleWorkerSingleTrial) {
  auto space = Space();
  RandomSearchAdvisor adv(space, 1);
  auto t = adv.Next(0);
  ASSERT_TRUE(adv.Collect(0, 0.2, *t).ok());
  EXPECT_TRUE(*adv.IsBest(0));
}

TEST(IsBest, WorseWorkerIsNotBest) {
  auto space = Space();
  RandomSearchAdvisor adv(space, 1);
  auto a = adv.Next(0);
  auto b = adv.Next(1);
  ASSERT_TRUE(adv.Collect(1, 0.9, *b).ok());
  ASSERT_TRUE(adv.Collect(0, 0.4, *a).ok());
  EXPECT_FALSE(*adv.IsBest(0));
  EXPECT_TRUE(*adv.IsBest(1));
}

TEST(IsBest, InterleavedReplayMatchesScan) {
  auto space = Space();
  RandomSearchAdvisor adv(space, 1);
  Rng rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::map<WorkerId, Trial> current;
  std::map<int64_t, double> best_of;
  for (int w = 0; w < 3; ++w) current[w] = *adv.Next(w);
  for (int step = 0; step < 90; ++step) {
    const WorkerId w = static_cast<WorkerId>(rng() % 3);
    if (step % 10 == 9) current[w] = *adv.Next(w);
    const double p = u(rng);
    ASSERT_TRUE(adv.Collect(w, p, current[w]).ok());
    auto& b = best_of[current[w].trial_id];
    b = std::max(b, p);
    int64_t top = -1;
    double top_p = -1;
    for (const auto& [id, bp] : best_of) {
      if (bp > top_p) {
        top_p = bp;
        top = id;
      }
    }
    for (const auto& [ww, t] : current) {
      if (!best_of.count(t.trial_id)) continue;
      EXPECT_EQ(*adv.IsBest(ww), t.trial_id == top) << "step " << step;
    }
  }
}

absl::StatusOr<bool> StopAfter(const std::vector<double>& reports, int patience) {
  static auto space = Space();
  RandomSearchAdvisor adv(space, 1);
  auto t = adv.Next(0);
  for (double p : reports) {
    if (auto s = adv.Collect(0, p, *t); !s.ok()) return s;
  }
  return adv.EarlyStopping(0, {patience, 0.0});
}

TEST(EarlyStopping, ImprovingIsNotStopped) {
  EXPECT_FALSE(*StopAfter({0.5, 0.6, 0.7}, 5));
}

TEST(EarlyStopping, FiveReportsWithoutGainStop) {
  EXPECT_FALSE(*StopAfter({0.7, 0.6, 0.65, 0.7, 0.69}, 5));
  EXPECT_TRUE(*StopAfter({0.7, 0.6, 0.65, 0.7, 0.69, 0.5}, 5));
}

TEST(EarlyStopping, MonotoneNeverStops) {
  std::vector<double> r;
  for (int i = 0; i < 20; ++i) {
    r.push_back(0.01 * (i + 1));
    EXPECT_FALSE(*StopAfter(r, 5));
  }
}

TEST(Gp, InterpolatesTrainingPoint) {
  GaussianProcess gp({0.3, 1.0, 1e-10, false});
  std::vector<std::vector<double>> x = {{0.1, 0.2}, {0.7, 0.4}, {0.5, 0.9}};
  std::vector<double> y = {0.3, -0.2, 0.8};
  ASSERT_TRUE(gp.Fit(x, y).ok());
  for (size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(gp.Predict(x[i])->mean, y[i], 1e-6);
  }
}

TEST(Gp, FarPointRevertsToPrior) {
  GaussianProcess gp({0.2, 1.5, 1e-4, false});
  ASSERT_TRUE(gp.Fit({{0.0}, {0.1}}, std::vector<double>{0.5, 0.7}).ok());
  auto post = gp.Predict(std::vector<double>{2.0});  // 10 lengthscales away
  EXPECT_NEAR(post->mean, 0.0, 1e-3);
  EXPECT_NEAR(post->variance, 1.5, 1e-3);
}

TEST(Gp, MatchesDenseConditioning) {
  Rng rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 5;
    GpConfig conf{0.2 + 0.3 * u(rng), 0.5 + u(rng), 1e-4, trial % 2 == 0};
    std::vector<std::vector<double>> x(n, std::vector<double>(3));
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) {
      for (double& c : x[i]) c = u(rng);
      y[i] = u(rng);
    }
    GaussianProcess gp(conf);
    ASSERT_TRUE(gp.Fit(x, y).ok());
    std::vector<double> xs = {u(rng), u(rng), u(rng)};
    auto got = gp.Predict(xs);
    auto want = oracle::DenseGpPosterior(x, y, xs, conf);
    EXPECT_NEAR(got->mean, want.mean, 1e-8);
    EXPECT_NEAR(got->variance, want.variance, 1e-8);
  }
}

TEST(Gp, PredictBeforeFit) {
  GaussianProcess gp({});
  EXPECT_EQ(gp.Predict(std::vector<double>{0.0}).status().code(),
            absl::StatusCode::kFailedPrecondition);
}

TEST(Ei, OneCandidate) {
  std::vector<GpPosterior> p = {{0.2, 0.1}};
  EXPECT_EQ(ArgmaxExpectedImprovement(p, 0.5), 0u);
}

TEST(Ei, DominantMeanWins) {
  std::vector<GpPosterior> p = {{0.5 - 1.0, 1e-18}, {0.5 + 1.0, 1e-18}};
  EXPECT_EQ(ArgmaxExpectedImprovement(p, 0.5), 1u);
}

TEST(Ei, MatchesBruteForce) {
  Rng rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int set = 0; set < 100; ++set) {
    std::vector<GpPosterior> p(100);
    for (auto& q : p) q = {u(rng), 0.05 * u(rng)};
    const double best = 0.7;
    EXPECT_EQ(ArgmaxExpectedImprovement(p, best), oracle::BruteForceEiArgmax(p, best));
  }
}

TEST(BayesOpt, ProposalMaximizesEiOverItsCandidates) {
  auto space = Space();
  BayesOptAdvisor adv(space, 5, {GpConfig{}, 5, 200});
  Rng rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    auto t = adv.Next(0);
    ASSERT_TRUE(adv.Collect(0, u(rng), *t).ok());
  }
  ASSERT_TRUE(adv.Next(0).has_value());
  const auto& tr = adv.last_proposal();
  ASSERT_EQ(tr.candidates.size(), 200u);
  std::vector<GpPosterior> dense;
  for (const auto& c : tr.candidates) {
    dense.push_back(oracle::DenseGpPosterior(tr.train_x, tr.train_y, c, adv.config().gp));
  }
  EXPECT_EQ(tr.chosen, oracle::BruteForceEiArgmax(dense, tr.best_y));
}

}  // namespace
}  // namespace rafiki
