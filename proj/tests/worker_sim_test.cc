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

#include "rafiki/worker_sim.h"

#include <cmath>
#include <thread>

#include <gtest/gtest.h>

#include "rafiki/task.h"
#include "rafiki/tune.h"

namespace rafiki {
namespace {

const std::vector<std::string> kArch = {"n_conv", "width", "kernel"};

HyperSpace Space() {
  return *HyperSpace::Build(SurrogateKnobs(), HookRegistry::WithBuiltins());
}

TaskConfig Quiet() {
  TaskConfig c;
  c.noise_sd = 0.0;
  c.seed = 5;
  return c;
}

class CurveTest : public ::testing::Test {
 protected:
  HyperSpace space_ = Space();
  Rng rng_{99};
};

TEST_F(CurveTest, ApproachesPeak) {
  SyntheticTask task(space_, Quiet());
  for (int i = 0; i < 20; ++i) {
    auto h = space_.SampleAssignment(rng_);
    EXPECT_NEAR(task.CurveMean(h, 1e4, 0.0, 0.0), task.PeakPerf(h), 1e-12);
    EXPECT_LE(task.PeakPerf(h), task.config().p_cap);
    EXPECT_GE(task.Kappa(h), 1.0);
  }
}

TEST_F(CurveTest, TimeConstantGivesOneMinusInverseE) {
  SyntheticTask task(space_, Quiet());
  for (int i = 0; i < 20; ++i) {
    auto h = space_.SampleAssignment(rng_);
    const double k = task.Kappa(h);
    EXPECT_NEAR(task.CurveMean(h, k, 0.0, 0.0),
                task.PeakPerf(h) * (1.0 - std::exp(-1.0)), 1e-12);
  }
}

TEST_F(CurveTest, WarmCreditRaisesFirstEpoch) {
  for (int i = 0; i < 100; ++i) {
    TaskConfig c = Quiet();
    c.seed = i;
    std::uniform_real_distribution<double> kap(1.0, 30.0);
    c.kappa_min = kap(rng_);
    c.kappa_max = c.kappa_min + kap(rng_);
    SyntheticTask task(space_, c);
    auto h = space_.SampleAssignment(rng_);
    const double k = task.Kappa(h);
    EXPECT_GT(task.LearningCurve(h, i, 1, k, 0.0), task.LearningCurve(h, i, 1, 0.0, 0.0));
  }
}

TEST_F(CurveTest, NoisyObservationIsClampedAndSeeded) {
  TaskConfig c;
  c.noise_sd = 0.5;
  SyntheticTask task(space_, c);
  auto h = space_.SampleAssignment(rng_);
  for (int e = 1; e <= 50; ++e) {
    const double p = task.LearningCurve(h, 3, e, 0.0, 0.0);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, c.p_cap);
    EXPECT_EQ(p, task.LearningCurve(h, 3, e, 0.0, 0.0));
  }
}

TEST_F(CurveTest, CreditForNoDonorIsZero) {
  SyntheticTask task(space_, Quiet());
  auto h = space_.SampleAssignment(rng_);
  EXPECT_EQ(task.WarmStartCredit(h, 0.0, 0.0).warm_e0, 0.0);
}

TEST_F(CurveTest, CreditInvertsClosedForm) {
  SyntheticTask task(space_, Quiet());
  for (int i = 0; i < 20; ++i) {
    auto h = space_.SampleAssignment(rng_);
    const double donor = (1.0 - std::exp(-1.0)) * task.PeakPerf(h);
    EXPECT_NEAR(task.WarmStartCredit(h, donor, donor).warm_e0, task.Kappa(h), 1e-9);
  }
}

TEST_F(CurveTest, CreditIsCappedForStrongDonors) {
  SyntheticTask task(space_, Quiet());
  auto h = space_.SampleAssignment(rng_);
  const double capped = -task.Kappa(h) * std::log(0.1);
  EXPECT_NEAR(task.WarmStartCredit(h, task.PeakPerf(h), 0.0).warm_e0, capped, 1e-9);
}

TEST_F(CurveTest, PoorDonorScalesPeak) {
  TaskConfig c = Quiet();
  c.lambda = 1.0;
  SyntheticTask task(space_, c);
  auto h = space_.SampleAssignment(rng_);
  WarmCredit credit = task.WarmStartCredit(h, 0.5, 0.7);
  EXPECT_NEAR(credit.deficit, 0.2, 1e-12);
  EXPECT_NEAR(task.CurveMean(h, 1e4, 0.0, credit.deficit), 0.8 * task.PeakPerf(h), 1e-12);
}

Trial FirstTrial(const HyperSpace& space) {
  Rng rng(4);
  return space.Sample(rng, 0);
}

TEST(TrialRunner, PlateauStopsWithinPatiencePlusOne) {
  auto space = Space();
  TaskConfig c = Quiet();
  c.kappa_min = c.kappa_max = 1.0;
  SyntheticTask task(space, c);
  WorkerConf conf;
  conf.max_epochs = 100;
  conf.early_stop = {5, 1e-3};
  Trial t = FirstTrial(space);
  // Onset: first epoch after which no report rises 1e-3 above the running best.
  int onset = 1;
  double best = task.LearningCurve(t.assignment, 0, 1, 0, 0);
  for (int e = 2; e <= 100; ++e) {
    const double p = task.LearningCurve(t.assignment, 0, e, 0, 0);
    if (p - best >= 1e-3) {
      best = p;
      onset = e;
    }
  }
  TrialRunner runner(task, nullptr, {}, conf, t);
  while (!runner.LocallyDone()) runner.RunEpoch();
  EXPECT_GT(runner.epoch(), onset);
  EXPECT_LE(runner.epoch(), onset + 6);
}

TEST(TrialRunner, CheckpointNeedsAnEpochAndIsDeterministic) {
  auto space = Space();
  SyntheticTask task(space, TaskConfig{});
  SigFn sig = [&](const Assignment& h) { return ConvNetSig(space, h, kArch); };
  TrialRunner runner(task, nullptr, sig, WorkerConf{}, FirstTrial(space));
  EXPECT_EQ(runner.Checkpoint().status().code(), absl::StatusCode::kFailedPrecondition);
  double best = 0.0;
  for (int e = 0; e < 4; ++e) best = std::max(best, runner.RunEpoch());
  auto a = runner.Checkpoint();
  auto b = runner.Checkpoint();
  ASSERT_TRUE(a.ok());
  EXPECT_EQ(*a, *b);
  EXPECT_EQ(a->perf, best);
  EXPECT_EQ(static_cast<int64_t>(a->payload.size()), a->sig.payload_bytes());
}

TEST(ConvNetSig, ChangesExactlyWithArchitectureKnobs) {
  auto space = Space();
  Rng rng(8);
  for (int round = 0; round < 30; ++round) {
    const Assignment base = space.SampleAssignment(rng);
    const ShapeSig base_sig = ConvNetSig(space, base, kArch);
    for (const auto& [name, value] : base) {
      Assignment other = base;
      for (int tries = 0; tries < 100 && other.at(name) == value; ++tries) {
        other[name] = space.SampleAssignment(rng).at(name);
      }
      ASSERT_NE(other.at(name), value) << name;
      const bool arch = std::find(kArch.begin(), kArch.end(), name) != kArch.end();
      EXPECT_EQ(ConvNetSig(space, other, kArch) != base_sig, arch) << name;
    }
  }
}

// Scripted master over an in-memory pair.
TEST(RunWorker, OneEpochTrialReportsOnceThenFinishes) {
  auto space = Space();
  SyntheticTask task(space, TaskConfig{});
  auto [master, worker] = MakeInMemoryPair();
  WorkerConf conf;
  conf.max_epochs = 1;
  absl::StatusOr<WorkerSummary> summary;
  std::thread th([&, w = worker.get()] {
    summary = RunWorker(2, *w, task, nullptr, {}, conf);
  });
  auto kind = [&] { return std::get<WireMessage>(*master->Recv()).type; };
  EXPECT_EQ(kind(), MsgType::kRequest);
  ASSERT_TRUE(master->Send(MasterDirective::SendTrial(2, FirstTrial(space))).ok());
  EXPECT_EQ(kind(), MsgType::kReport);
  EXPECT_EQ(kind(), MsgType::kFinish);
  EXPECT_EQ(kind(), MsgType::kRequest);
  ASSERT_TRUE(master->Send(MasterDirective::Shutdown(2)).ok());
  th.join();
  ASSERT_TRUE(summary.ok());
  EXPECT_EQ(summary->trials, 1);
  EXPECT_EQ(summary->epochs, 1);
}

TEST(RunWorker, ClosedTransportEndsQuietly) {
  auto space = Space();
  SyntheticTask task(space, TaskConfig{});
  auto [master, worker] = MakeInMemoryPair();
  master->Close();
  auto summary = RunWorker(0, *worker, task, nullptr, {}, WorkerConf{});
  EXPECT_TRUE(summary.ok() || IsTransportClosed(summary.status()));
}

TEST(SimCluster, StopAfterThirdReportEndsTrial) {
  auto space = Space();
  SyntheticTask task(space, TaskConfig{});
  WorkerConf conf;
  conf.max_epochs = 10;
  SimCluster cluster(1, task, nullptr, {}, conf);
  ASSERT_EQ(cluster.Recv()->type, MsgType::kRequest);
  ASSERT_TRUE(cluster.Send(MasterDirective::SendTrial(0, FirstTrial(space))).ok());
  for (int e = 1; e <= 3; ++e) {
    auto m = cluster.Recv();
    ASSERT_TRUE(m.ok());
    ASSERT_EQ(m->type, MsgType::kReport) << e;
  }
  ASSERT_TRUE(cluster.Send(MasterDirective::Stop(0)).ok());
  EXPECT_EQ(cluster.Recv()->type, MsgType::kFinish);
  EXPECT_EQ(cluster.progress().size(), 3u);
}

TEST(SimCluster, PutCheckpointsBestEpoch) {
  auto space = Space();
  SyntheticTask task(space, TaskConfig{});
  ParamStore store;
  SigFn sig = [&](const Assignment& h) { return ConvNetSig(space, h, kArch); };
  WorkerConf conf;
  conf.max_epochs = 3;
  SimCluster cluster(1, task, &store, sig, conf);
  ASSERT_EQ(cluster.Recv()->type, MsgType::kRequest);
  ASSERT_TRUE(cluster.Send(MasterDirective::SendTrial(0, FirstTrial(space))).ok());
  double best = 0.0;
  while (true) {
    auto m = cluster.Recv();
    ASSERT_TRUE(m.ok());
    if (m->type == MsgType::kFinish) break;
    best = std::max(best, *m->p);
  }
  ASSERT_TRUE(cluster.Send(MasterDirective::Put(0)).ok());
  ASSERT_EQ(cluster.Recv()->type, MsgType::kRequest);
  ASSERT_EQ(store.size(), 1u);
  EXPECT_EQ(store.BestPerf(), best);
}

}  // namespace
}  // namespace rafiki
