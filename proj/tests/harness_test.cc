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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "rafiki/commands.h"
#include "rafiki/config.h"
#include "rafiki/csv.h"

namespace rafiki {
namespace {

namespace fs = std::filesystem;

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path Scratch(const std::string& name) {
  fs::path p = fs::path(::testing::TempDir()) / ("rafiki_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<std::vector<std::string>> ReadCsv(const fs::path& p) {
  auto rows = ParseCsv(Slurp(p));
  EXPECT_TRUE(rows.ok()) << p;
  return rows.ok() ? *rows : std::vector<std::vector<std::string>>{};
}

TEST(LoadConfig, MinimalConfigTakesDefaults) {
  auto c = LoadConfigText("[study]\nmax_trials = 7\n");
  ASSERT_TRUE(c.ok()) << c.status();
  EXPECT_EQ(c->tune.study.max_trials, 7);
  const RunConfig d;
  EXPECT_EQ(c->tune.workers, d.tune.workers);
  EXPECT_EQ(c->seeds, 1);
  EXPECT_EQ(c->serve.dispatcher, "rl");
  EXPECT_EQ(c->serve.batching.batch_sizes, DefaultBatchSizes());
}

TEST(LoadConfig, DanglingEnsembleNameIsNamed) {
  auto c = LoadConfigText(
      "[ensemble]\ntable = explicit\nacc.inception_v3 = 0.7\nacc.nosuchnet = 0.8\n");
  ASSERT_EQ(c.status().code(), absl::StatusCode::kInvalidArgument);
  const std::string msg(c.status().message());
  EXPECT_NE(msg.find("ValidationError"), std::string::npos);
  EXPECT_NE(msg.find("nosuchnet"), std::string::npos);
}

TEST(LoadConfig, EveryViolationReported) {
  auto c = LoadConfigText("[study]\nmax_trials = -1\nbogus = 1\n[nosection]\nx = 1\n");
  ASSERT_FALSE(c.ok());
  const std::string msg(c.status().message());
  EXPECT_NE(msg.find("max_trials"), std::string::npos);
  EXPECT_NE(msg.find("bogus"), std::string::npos);
  EXPECT_NE(msg.find("nosection"), std::string::npos);
}

TEST(LoadConfig, ParseErrorCarriesLine) {
  auto c = LoadConfigText("[study]\nmax_trials = 3\nthis line has no equals\n");
  ASSERT_FALSE(c.ok());
  EXPECT_NE(std::string(c.status().message()).find("ParseError: line 3"), std::string::npos)
      << c.status();
}

TEST(LoadConfig, EchoRoundTrips) {
  const std::vector<std::string> texts = {
      "[study]\nmax_trials = 12\nmode = costudy\n[advisor]\nkind = bayes\n",
      "[models]\npreset = single\n[workload]\ndispatcher = greedy\nanchor = min\ntau = 0.56\n",
      "[ensemble]\ntable = explicit\nacc.inception_v3 = 0.7\nacc.inception_v4 = 0.71\n"
      "acc.inception_resnet_v2 = 0.72\nacc.inception_v3+inception_v4 = 0.73\n"
      "acc.inception_v3+inception_resnet_v2 = 0.74\n"
      "acc.inception_v4+inception_resnet_v2 = 0.75\n"
      "acc.inception_v3+inception_v4+inception_resnet_v2 = 0.76\n",
      "[space.lr]\ntype = range\nmin = 0.001\nmax = 0.1\nlog = true\n"
      "[space.width]\ntype = choice\nvalues = 16,32\n"};
  for (const auto& t : texts) {
    auto a = LoadConfigText(t);
    ASSERT_TRUE(a.ok()) << a.status() << "\n" << t;
    const std::string echo = EchoConfig(*a);
    auto b = LoadConfigText(echo);
    ASSERT_TRUE(b.ok()) << b.status() << "\n" << echo;
    EXPECT_EQ(EchoConfig(*b), echo);
  }
}

TEST(LoadConfig, OverridesApply) {
  auto c = LoadConfigText("[study]\nmax_trials = 5\n", {"study.max_trials=9", "run.seed=4"});
  ASSERT_TRUE(c.ok());
  EXPECT_EQ(c->tune.study.max_trials, 9);
  EXPECT_EQ(c->seed, 4u);
  EXPECT_FALSE(LoadConfigText("", {"nodot=1"}).ok());
}

TEST(Csv, Rfc4180RoundTrip) {
  CsvTable t({"a", "b"});
  ASSERT_TRUE(t.AddRow({"plain", "with,comma"}).ok());
  ASSERT_TRUE(t.AddRow({"say \"hi\"", "two\r\nlines"}).ok());
  EXPECT_FALSE(t.AddRow({"short"}).ok());
  const std::string text = t.ToString();
  EXPECT_NE(text.find("\r\n"), std::string::npos);
  auto rows = ParseCsv(text);
  ASSERT_TRUE(rows.ok());
  ASSERT_EQ(rows->size(), 3u);
  EXPECT_EQ((*rows)[1][1], "with,comma");
  EXPECT_EQ((*rows)[2][0], "say \"hi\"");
  EXPECT_EQ((*rows)[2][1], "two\r\nlines");
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.678}) {
    EXPECT_EQ(std::stod(CsvNumber(v)), v);
  }
}

RunConfig TuneConfigFor(const fs::path& out, const std::string& extra = "") {
  auto c = LoadConfigText("[advisor]\nkind = random\n[study]\nmode = study\nmax_trials = 20\n"
                          "workers = 1\n[run]\nseed = 1\n" + extra);
  EXPECT_TRUE(c.ok()) << c.status();
  c->out_dir = out.string();
  return *c;
}

TEST(CmdTune, TwentyTrialsTwentyRows) {
  const fs::path out = Scratch("tune20");
  ASSERT_TRUE(CmdTune(TuneConfigFor(out)).ok());
  const auto rows = ReadCsv(out / "trials.csv");
  EXPECT_EQ(rows.size(), 21u);
  for (const char* f : {"best.json", "progress.csv", "summary.csv", "config.json", "run.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
}

TEST(CmdCompare, IdenticalRunsHaveZeroDeltas) {
  const fs::path a = Scratch("cmp_a"), b = Scratch("cmp_b");
  ASSERT_TRUE(CmdTune(TuneConfigFor(a, "seeds = 3\n")).ok());
  ASSERT_TRUE(CmdTune(TuneConfigFor(b, "seeds = 3\n")).ok());
  auto report = CompareRuns(a.string(), b.string());
  ASSERT_TRUE(report.ok()) << report.status();
  EXPECT_TRUE(report->differing.empty());
  ASSERT_FALSE(report->rows.empty());
  for (const auto& r : report->rows) {
    // Unreached targets leave empty cells, which are not paired.
    EXPECT_TRUE(r.pairs == 3 || (r.metric == "time_to_target" && r.pairs == 0)) << r.metric;
    EXPECT_EQ(r.mean_delta, 0.0) << r.metric;
    EXPECT_EQ(r.wins + r.losses, 0) << r.metric;
  }
  const fs::path out = Scratch("cmp_out");
  ASSERT_TRUE(CmdCompare({a.string(), b.string()}, out.string()).ok());
  EXPECT_TRUE(fs::exists(out / "compare.md"));
  EXPECT_TRUE(fs::exists(out / "compare.csv"));
}

TEST(CmdCompare, DifferentWorkerCountsAreIncompatible) {
  const fs::path a = Scratch("inc_a"), b = Scratch("inc_b");
  ASSERT_TRUE(CmdTune(TuneConfigFor(a)).ok());
  RunConfig other = TuneConfigFor(b);
  other.tune.workers = 2;
  ASSERT_TRUE(CmdTune(other).ok());
  auto report = CompareRuns(a.string(), b.string());
  EXPECT_EQ(report.status().code(), absl::StatusCode::kFailedPrecondition);
  EXPECT_NE(std::string(report.status().message()).find("IncompatibleRuns"), std::string::npos);
  EXPECT_TRUE(CompareRuns(a.string(), b.string(), {"study.workers"}).ok());
}

TEST(CmdServeSim, RlRewardCurveIsReproducible) {
  const std::string text =
      "[workload]\ndispatcher = rl\nperiod = 20\nduration = 20\n[rl]\ntrain_episodes = 3\n";
  std::string curves[2];
  for (int i = 0; i < 2; ++i) {
    const fs::path out = Scratch("rl" + std::to_string(i));
    auto c = LoadConfigText(text);
    ASSERT_TRUE(c.ok()) << c.status();
    c->out_dir = out.string();
    ASSERT_TRUE(CmdServeSim(*c).ok());
    curves[i] = Slurp(out / "train.csv");
    EXPECT_TRUE(fs::exists(out / "metrics.csv"));
  }
  EXPECT_FALSE(curves[0].empty());
  EXPECT_EQ(curves[0], curves[1]);
}

TEST(SignTest, Examples) {
  EXPECT_DOUBLE_EQ(SignTestP(0, 0), 1.0);
  EXPECT_NEAR(SignTestP(10, 0), 2.0 / 1024, 1e-15);
  EXPECT_NEAR(SignTestP(0, 10), 2.0 / 1024, 1e-15);
  // Two-sided P(X <= 5) for Binomial(20, 1/2) doubled.
  EXPECT_NEAR(SignTestP(15, 5), 2.0 * 21700.0 / 1048576.0, 1e-12);
  EXPECT_DOUBLE_EQ(SignTestP(5, 5), 1.0);
}

}  // namespace
}  // namespace rafiki
