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

// Acceptance suite. Prints one "AC-n PASS|FAIL ..." line per criterion and
// exits nonzero if any selected criterion fails.
//
//   rafiki_acceptance [--only AC-n]... [--presets DIR]

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "oracles.h"
#include "rafiki/commands.h"
#include "rafiki/config.h"
#include "rafiki/gp.h"
#include "rafiki/rl.h"
#include "rafiki/serve.h"
#include "rafiki/tune.h"
#include "rafiki/workload.h"

namespace rafiki {
namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string g_presets = RAFIKI_PRESET_DIR;

RunConfig Preset(const std::string& name, const std::vector<std::string>& sets = {}) {
  auto c = LoadConfig(g_presets + "/" + name + ".ini", sets);
  if (!c.ok()) {
    std::cerr << name << ": " << c.status() << "\n";
    std::exit(2);
  }
  return *std::move(c);
}

HyperSpace SpaceOf(const RunConfig& c) {
  return *HyperSpace::Build(c.space, HookRegistry::WithBuiltins());
}

std::string Num(double v, int digits = 4) { return absl::StrFormat("%.*f", digits, v); }

double Mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / v.size();
}

// Best p after the budget for every seed of the preset.
std::vector<double> BestPerSeed(const RunConfig& c) {
  const HyperSpace space = SpaceOf(c);
  std::vector<double> out;
  for (uint64_t seed : RunSeeds(c)) {
    auto r = RunTune(space, c.tune, seed);
    if (!r.ok()) {
      std::cerr << r.status() << "\n";
      std::exit(2);
    }
    out.push_back(r->outcome.best.p);
  }
  return out;
}

Verdict Ac1() {
  Verdict v{true, ""};
  for (const char* adv : {"random", "bo"}) {
    const std::string preset = absl::StrCat("cifar-surrogate-", adv);
    const auto study = BestPerSeed(Preset(preset, {"study.mode=study"}));
    const auto co = BestPerSeed(Preset(preset));
    std::vector<double> delta;
    int wins = 0, losses = 0;
    for (size_t i = 0; i < co.size(); ++i) {
      delta.push_back(co[i] - study[i]);
      wins += co[i] > study[i];
      losses += co[i] < study[i];
    }
    const double p = SignTestP(wins, losses);
    const bool ok = Mean(delta) > 0.0 && p < 0.05;
    v.pass = v.pass && ok;
    absl::StrAppend(&v.detail, adv, ": delta ", Num(Mean(delta)), " wins ", wins, "/",
                    wins + losses, " p ", absl::StrFormat("%.2g", p), "; ");
  }
  return v;
}

Verdict Ac2() {
  const auto random = BestPerSeed(Preset("cifar-surrogate-random", {"study.mode=study"}));
  const auto bayes = BestPerSeed(Preset("cifar-surrogate-bo", {"study.mode=study"}));
  const double gap = Mean(bayes) - Mean(random);
  return {gap >= 0.01, absl::StrCat("bo ", Num(Mean(bayes)), " random ", Num(Mean(random)),
                                    " gap ", Num(gap), " (need >= 0.01)")};
}

Verdict Ac3() {
  const RunConfig c = Preset("tune-scaling");
  const HyperSpace space = SpaceOf(c);
  const double target = c.tune.study.target_p.value_or(0.9 * c.tune.task.p_cap);
  Verdict v{std::abs(target - 0.9 * c.tune.task.p_cap) < 1e-12, ""};
  absl::StrAppend(&v.detail, "target ", Num(target), "; ");
  double prev = 0.0;
  int prev_w = 0;
  for (int w : c.workers_sweep) {
    TuneConfig tc = c.tune;
    tc.workers = w;
    std::vector<double> times;
    for (uint64_t seed : RunSeeds(c)) {
      auto r = RunTune(space, tc, seed, target);
      if (r.ok() && r->time_to_target) times.push_back(*r->time_to_target);
    }
    if (static_cast<int>(times.size()) != c.seeds) {
      v.pass = false;
      absl::StrAppend(&v.detail, "w", w, " reached ", times.size(), "/", c.seeds, "; ");
      prev = 0.0;
      continue;
    }
    const double mean = Mean(times);
    if (prev > 0.0) {
      const double speedup = prev / mean;
      const double need = 0.8 * static_cast<double>(w) / prev_w;
      v.pass = v.pass && speedup >= need;
      absl::StrAppend(&v.detail, "w", prev_w, "->w", w, " ", Num(speedup, 3), "x; ");
    }
    prev = mean;
    prev_w = w;
  }
  absl::StrAppend(&v.detail, "(need >= 1.6x per doubling)");
  return v;
}

struct ServeSummary {
  double accuracy = 0.0;
  double overdue = 0.0;
  double low_accuracy = 0.0;
  int64_t windows = 0;
};

// Means over the preset's seeds of the evaluation episode.
ServeSummary Serve(const RunConfig& c) {
  ServeSummary s;
  std::vector<double> acc, od, low;
  for (uint64_t seed : RunSeeds(c)) {
    auto r = RunServe(c.serve, seed);
    if (!r.ok()) {
      std::cerr << r.status() << "\n";
      std::exit(2);
    }
    acc.push_back(r->eval.MeanAccuracy());
    od.push_back(r->eval.OverduePerSec());
    low.push_back(r->eval.MeanAccuracy(r->eval.LowRateWindows()));
    s.windows += r->eval.windows.size();
  }
  s.accuracy = Mean(acc);
  s.overdue = Mean(od);
  s.low_accuracy = Mean(low);
  return s;
}

std::string Describe(const char* name, const ServeSummary& s) {
  return absl::StrCat(name, " acc ", Num(s.accuracy), " overdue/s ", Num(s.overdue, 3));
}

Verdict Ac4() {
  const ServeSummary rl_u = Serve(Preset("serve-multi-async"));
  const ServeSummary async = Serve(Preset("serve-multi-async", {"workload.dispatcher=async"}));
  const bool acc_up = rl_u.accuracy >= 1.05 * async.accuracy;
  const bool od_down = rl_u.overdue <= 0.95 * async.overdue;
  const ServeSummary rl_l = Serve(Preset("serve-multi-sync"));
  const ServeSummary sync = Serve(Preset("serve-multi-sync", {"workload.dispatcher=sync"}));
  const bool od_ok = rl_l.overdue <= sync.overdue;
  const bool low_ok = std::abs(rl_l.low_accuracy - sync.low_accuracy) <= 0.02;
  Verdict v{acc_up && od_down && od_ok && low_ok, ""};
  absl::StrAppend(&v.detail, "(a) ", acc_up && od_down ? "ok" : "miss", ": ",
                  Describe("rl", rl_u), " vs ", Describe("async", async),
                  " (need acc >= +5% and overdue <= -5%); ");
  absl::StrAppend(&v.detail, "(b) ", od_ok && low_ok ? "ok" : "miss", ": ",
                  Describe("rl", rl_l), " low-rate acc ", Num(rl_l.low_accuracy), " vs ",
                  Describe("sync", sync), " low-rate acc ", Num(sync.low_accuracy));
  return v;
}

Verdict Ac5() {
  const ServeSummary b0 = Serve(Preset("serve-beta-sweep"));
  const ServeSummary b1 = Serve(Preset("serve-beta-sweep", {"rl.beta=1"}));
  return {b0.accuracy >= b1.accuracy && b0.overdue >= b1.overdue,
          absl::StrCat(Describe("beta=0", b0), "; ", Describe("beta=1", b1))};
}

Verdict Ac6() {
  const ModelProfile single = SingleModelProfile();
  const auto bs = DefaultBatchSizes();
  const double c16 = *single.Cost(16), c64 = *single.Cost(64);
  const bool ends = c16 == 0.07 && c64 == 0.23;
  const bool max_ok = std::abs(MaxThroughput(single, bs) - 64 / 0.23) < 1e-9;
  const bool min_ok = std::abs(MinThroughput(single, bs) - 16 / 0.07) < 1e-9;
  const double tau = Preset("serve-single-max").serve.batching.tau;
  const bool tau_ok = tau == 0.56 && 2 * c64 == 0.56;
  const double sync = SyncThroughput(ServingTrio(), bs);
  const double async = AsyncThroughput(ServingTrio(), bs);
  const bool trio_ok = std::abs(sync - 128) < 1e-9 && std::abs(async - 572) < 1e-9;
  Verdict v{ends && max_ok && min_ok && tau_ok && trio_ok, ""};
  absl::StrAppend(&v.detail, "64/c(64) ", Num(MaxThroughput(single, bs), 6),
                  max_ok ? " ok" : " BAD", "; 16/c(16) ", Num(MinThroughput(single, bs), 6),
                  min_ok ? " ok" : " BAD", "; tau ", Num(tau, 2), " vs 2*c(64) = ",
                  Num(2 * c64, 2), tau_ok ? " ok" : " MISMATCH", "; sync ", Num(sync, 6),
                  " async ", Num(async, 6), trio_ok ? " ok" : " BAD");
  return v;
}

Verdict Ac7() {
  Rng rng(7);
  std::uniform_int_distribution<int> dim(2, 10), hid(2, 16), act(2, 28);
  std::normal_distribution<double> n(0.0, 1.0);
  double fd_worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    Mlp policy(dim(rng), hid(rng), act(rng));
    policy.InitRandom(rng);
    Eigen::VectorXd s(policy.in());
    for (int k = 0; k < s.size(); ++k) s[k] = n(rng);
    const int a = std::uniform_int_distribution<int>(0, policy.out() - 1)(rng);
    fd_worst = std::max(fd_worst, oracle::RelativeError(PolicyLogProbGrad(policy, s, a),
                                                        oracle::FiniteDiffLogProbGrad(policy, s, a)));
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double gp_worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int pts = 1 + i % 5;
    GpConfig conf{0.1 + 0.4 * u(rng), 0.5 + u(rng), 1e-4, i % 2 == 0};
    std::vector<std::vector<double>> x(pts, std::vector<double>(4));
    std::vector<double> y(pts);
    for (int k = 0; k < pts; ++k) {
      for (double& c : x[k]) c = u(rng);
      y[k] = u(rng);
    }
    GaussianProcess gp(conf);
    if (!gp.Fit(x, y).ok()) return {false, "gp fit failed"};
    std::vector<double> xs = {u(rng), u(rng), u(rng), u(rng)};
    const auto got = *gp.Predict(xs);
    const auto want = oracle::DenseGpPosterior(x, y, xs, conf);
    gp_worst = std::max({gp_worst, std::abs(got.mean - want.mean),
                         std::abs(got.variance - want.variance)});
  }
  int ei_agree = 0;
  for (int i = 0; i < 100; ++i) {
    std::vector<GpPosterior> p(50 + i);
    for (auto& q : p) q = {u(rng), 0.05 * u(rng)};
    const double best = 0.5 + 0.4 * u(rng);
    ei_agree += ArgmaxExpectedImprovement(p, best) == oracle::BruteForceEiArgmax(p, best);
  }
  return {fd_worst < 1e-4 && gp_worst < 1e-8 && ei_agree == 100,
          absl::StrCat("fd max rel err ", absl::StrFormat("%.2e", fd_worst), "; gp max abs err ",
                       absl::StrFormat("%.2e", gp_worst), "; ei argmax ", ei_agree, "/100")};
}

Verdict Ac8() {
  Verdict v{true, ""};
  int scripts = 0, guards = 0, consults = 0;
  for (const auto& s : oracle::MasterScripts()) {
    auto r = oracle::ReplayMaster(s);
    if (!r.ok) absl::StrAppend(&v.detail, s.name, ": ", r.detail, "; ");
    v.pass = v.pass && r.ok;
    scripts += r.branches;
  }
  for (const auto& c : oracle::GuardCases()) {
    auto r = oracle::ReplayGuard(c);
    if (!r.ok) absl::StrAppend(&v.detail, c.name, ": ", r.detail, "; ");
    v.pass = v.pass && r.ok && std::abs(c.delta - 0.1 * c.tau) < 1e-12;
    ++guards;
  }
  for (const auto& c : oracle::DispatcherCases()) {
    auto r = oracle::ReplayDispatcher(c);
    if (!r.ok) absl::StrAppend(&v.detail, c.name, ": ", r.detail, "; ");
    v.pass = v.pass && r.ok;
    consults += r.branches;
  }
  absl::StrAppend(&v.detail, "master steps ", scripts, ", guard cases ", guards,
                  ", dispatcher consults ", consults);
  return v;
}

Verdict Ac9() {
  Verdict v{true, ""};
  const auto bs = DefaultBatchSizes();
  std::vector<double> refs;
  for (RateAnchor a : {RateAnchor::kMax, RateAnchor::kMin}) {
    refs.push_back(AnchorRate({SingleModelProfile()}, bs, a));
    refs.push_back(AnchorRate(ServingTrio(), bs, a));
  }
  double frac_worst = 0.0, peak_worst = 0.0;
  for (double ref : refs) {
    const RateParams p = SolveRateParams(ref, 280.0);
    frac_worst = std::max(frac_worst, std::abs(oracle::ExceedanceFraction(p) - 0.2));
    peak_worst = std::max(peak_worst, std::abs(p.peak() - 1.1 * ref) / ref);
  }
  v.pass = frac_worst <= 1e-6 && peak_worst <= 1e-15;
  absl::StrAppend(&v.detail, "exceedance err ", absl::StrFormat("%.1e", frac_worst),
                  ", peak rel err ", absl::StrFormat("%.1e", peak_worst), "; ");
  // RunServe checks conservation on every training and evaluation episode.
  int64_t windows = 0;
  for (const char* preset : {"serve-single-max", "serve-single-min", "serve-multi-sync",
                             "serve-multi-async", "serve-beta-sweep"}) {
    for (const char* d : {"", "greedy", "sync", "async"}) {
      std::vector<std::string> sets = {"run.seeds=1", "rl.train_episodes=20"};
      if (*d) sets.push_back(absl::StrCat("workload.dispatcher=", d));
      const RunConfig c = Preset(preset, sets);
      if (c.serve.models.size() > 1 && std::string(d) == "greedy") continue;
      auto r = RunServe(c.serve, c.seed);
      const bool ok = r.ok() && r->eval.CheckConservation().ok();
      if (!ok) absl::StrAppend(&v.detail, preset, "/", *d ? d : "rl", " violated; ");
      v.pass = v.pass && ok;
      if (r.ok()) windows += r->eval.windows.size();
    }
  }
  absl::StrAppend(&v.detail, "conservation held in ", windows, " evaluation windows");
  return v;
}

}  // namespace
}  // namespace rafiki

int main(int argc, char** argv) {
  using namespace rafiki;
  CLI::App app{"Acceptance suite"};
  std::vector<std::string> only;
  app.add_option("--only", only, "Run only these criteria (AC-1 ... AC-9)");
  app.add_option("--presets", g_presets, "Preset directory");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Verdict()>>> all = {
      {"AC-1", Ac1}, {"AC-2", Ac2}, {"AC-3", Ac3}, {"AC-4", Ac4}, {"AC-5", Ac5},
      {"AC-6", Ac6}, {"AC-7", Ac7}, {"AC-8", Ac8}, {"AC-9", Ac9}};
  bool failed = false;
  int ran = 0;
  for (const auto& [name, run] : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Verdict v = run();
    while (!v.detail.empty() && (v.detail.back() == ' ' || v.detail.back() == ';')) {
      v.detail.pop_back();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << name << (v.pass ? " PASS " : " FAIL ") << v.detail
              << absl::StrFormat(" [%.1fs]", secs) << std::endl;
    failed = failed || !v.pass;
  }
  if (ran == 0) {
    std::cerr << "no criteria selected\n";
    return 2;
  }
  return failed ? 1 : 0;
}
