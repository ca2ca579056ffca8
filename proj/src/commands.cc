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

#include "rafiki/commands.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/math/distributions/binomial.hpp>
#include <json.hpp>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "rafiki/csv.h"
#include "rafiki/tune.h"
#include "rafiki/wire.h"

namespace rafiki {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

absl::Status WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) return absl::InternalError(absl::StrCat("cannot write ", path.string()));
  return absl::OkStatus();
}

absl::StatusOr<std::string> ReadText(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot read ", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

absl::Status PrepareOut(const RunConfig& conf, const std::string& command) {
  std::error_code ec;
  fs::create_directories(conf.out_dir, ec);
  if (ec) return absl::InternalError(absl::StrCat("cannot create ", conf.out_dir, ": ", ec.message()));
  const fs::path dir(conf.out_dir);
  if (auto s = WriteText(dir / "config.json", EchoConfig(conf)); !s.ok()) return s;
  json run = {{"version", kVersion},
              {"command", command},
              {"seed", conf.seed},
              {"seeds", RunSeeds(conf)}};
  return WriteText(dir / "run.json", run.dump(2) + "\n");
}

std::string OriginText(const TrialOrigin& o) {
  return o.kind == TrialOrigin::Kind::kWarm ? absl::StrCat("warm:", o.source) : "random";
}

std::string Cell(std::optional<double> v) { return v ? CsvNumber(*v) : ""; }

#define RAFIKI_RETURN_IF_ERROR(expr)   \
  do {                                 \
    if (absl::Status _s = (expr); !_s.ok()) return _s; \
  } while (0)

absl::Status TuneSweep(const RunConfig& conf, const HyperSpace& space) {
  const double target = conf.tune.study.target_p.value_or(0.9 * conf.tune.task.p_cap);
  CsvTable scaling({"workers", "seed", "time_to_target", "best_p", "trials", "elapsed"});
  std::vector<std::string> header = {"seed"};
  for (int w : conf.workers_sweep) header.push_back(absl::StrCat("ttt_w", w));
  CsvTable summary(header);
  std::map<int, std::vector<double>> times;
  for (uint64_t seed : RunSeeds(conf)) {
    std::vector<std::string> row = {absl::StrCat(seed)};
    for (int w : conf.workers_sweep) {
      TuneConfig tc = conf.tune;
      tc.workers = w;
      auto r = RunTune(space, tc, seed, target);
      if (!r.ok()) return r.status();
      RAFIKI_RETURN_IF_ERROR(scaling.AddRow(
          {absl::StrCat(w), absl::StrCat(seed), Cell(r->time_to_target),
           CsvNumber(r->outcome.best.p), absl::StrCat(r->outcome.final_state.num),
           CsvNumber(r->outcome.elapsed)}));
      row.push_back(Cell(r->time_to_target));
      if (r->time_to_target) times[w].push_back(*r->time_to_target);
    }
    RAFIKI_RETURN_IF_ERROR(summary.AddRow(std::move(row)));
  }
  const fs::path dir(conf.out_dir);
  RAFIKI_RETURN_IF_ERROR(scaling.Write((dir / "scaling.csv").string()));
  RAFIKI_RETURN_IF_ERROR(summary.Write((dir / "summary.csv").string()));
  CsvTable speed({"workers", "reached", "mean_time_to_target", "speedup_vs_previous"});
  double prev = 0.0;
  for (int w : conf.workers_sweep) {
    const auto& v = times[w];
    double mean = 0.0;
    for (double t : v) mean += t;
    if (!v.empty()) mean /= v.size();
    const std::string sp = (prev > 0.0 && mean > 0.0) ? CsvNumber(prev / mean) : "";
    RAFIKI_RETURN_IF_ERROR(speed.AddRow({absl::StrCat(w), absl::StrCat(v.size()),
                                         v.empty() ? "" : CsvNumber(mean), sp}));
    prev = v.empty() ? 0.0 : mean;
  }
  return speed.Write((dir / "speedup.csv").string());
}

}  // namespace

std::vector<uint64_t> RunSeeds(const RunConfig& conf) {
  std::vector<uint64_t> seeds;
  for (int i = 0; i < conf.seeds; ++i) seeds.push_back(conf.seed + i);
  return seeds;
}

absl::Status CmdTune(const RunConfig& conf) {
  auto space = HyperSpace::Build(conf.space, HookRegistry::WithBuiltins());
  if (!space.ok()) return space.status();
  RAFIKI_RETURN_IF_ERROR(PrepareOut(conf, "tune"));
  if (!conf.workers_sweep.empty()) return TuneSweep(conf, *space);

  const fs::path dir(conf.out_dir);
  CsvTable trials({"seed", "trial_id", "worker", "origin", "p", "epochs", "assignment"});
  CsvTable progress({"seed", "time", "worker", "trial_id", "epoch", "p", "best_p"});
  CsvTable summary({"seed", "best_p", "trials", "elapsed", "time_to_target", "puts_stored",
                    "gp_fits"});
  json best = json::array();
  std::ofstream audit;
  if (conf.trace) audit.open(dir / "audit.jsonl", std::ios::binary);
  for (uint64_t seed : RunSeeds(conf)) {
    auto r = RunTune(*space, conf.tune, seed, conf.tune.study.target_p);
    if (!r.ok()) return r.status();
    std::vector<TrialRecord> finished = r->finished;
    std::sort(finished.begin(), finished.end(), [](const TrialRecord& a, const TrialRecord& b) {
      return a.trial.trial_id < b.trial.trial_id;
    });
    for (const auto& t : finished) {
      RAFIKI_RETURN_IF_ERROR(trials.AddRow(
          {absl::StrCat(seed), absl::StrCat(t.trial.trial_id), absl::StrCat(t.worker),
           OriginText(t.trial.origin), CsvNumber(t.p), absl::StrCat(t.epochs_used),
           AssignmentToJson(t.trial.assignment).dump()}));
    }
    double best_so_far = 0.0;
    for (const auto& e : r->progress) {
      best_so_far = std::max(best_so_far, e.p);
      RAFIKI_RETURN_IF_ERROR(progress.AddRow(
          {absl::StrCat(seed), CsvNumber(e.time), absl::StrCat(e.worker),
           absl::StrCat(e.trial_id), absl::StrCat(e.epoch), CsvNumber(e.p),
           CsvNumber(best_so_far)}));
    }
    const auto& b = r->outcome.best;
    best.push_back({{"seed", seed},
                    {"trial_id", b.trial.trial_id},
                    {"p", b.p},
                    {"worker", b.worker},
                    {"epochs", b.epochs_used},
                    {"origin", OriginText(b.trial.origin)},
                    {"assignment", json::parse(AssignmentToJson(b.trial.assignment).dump())}});
    RAFIKI_RETURN_IF_ERROR(summary.AddRow(
        {absl::StrCat(seed), CsvNumber(b.p), absl::StrCat(r->outcome.final_state.num),
         CsvNumber(r->outcome.elapsed), Cell(r->time_to_target),
         absl::StrCat(r->puts_stored), absl::StrCat(r->gp_fits)}));
    if (audit.is_open()) {
      for (const auto& entry : r->outcome.log) {
        json line = {{"seed", seed},
                     {"time", entry.time},
                     {"msg", json::parse(FrameToJson(entry.msg).dump())}};
        json dirs = json::array();
        for (const auto& d : entry.directives) dirs.push_back(json::parse(FrameToJson(d).dump()));
        line["directives"] = dirs;
        audit << line.dump() << "\n";
      }
    }
  }
  RAFIKI_RETURN_IF_ERROR(trials.Write((dir / "trials.csv").string()));
  RAFIKI_RETURN_IF_ERROR(progress.Write((dir / "progress.csv").string()));
  RAFIKI_RETURN_IF_ERROR(summary.Write((dir / "summary.csv").string()));
  return WriteText(dir / "best.json", best.dump(2) + "\n");
}

absl::Status CmdServeSim(const RunConfig& conf) {
  RAFIKI_RETURN_IF_ERROR(PrepareOut(conf, "serve-sim"));
  const fs::path dir(conf.out_dir);
  CsvTable metrics({"seed", "t", "rate", "arriving", "completed", "overdue", "dropped",
                    "mean_accuracy", "mean_latency", "queued", "in_flight"});
  CsvTable train({"seed", "episode", "reward"});
  CsvTable summary({"seed", "mean_accuracy", "overdue_per_s", "low_rate_accuracy",
                    "low_rate_overdue_per_s", "dropped_per_s", "arriving_per_s",
                    "eval_reward"});
  std::ofstream trace;
  if (conf.trace) trace.open(dir / "trace.jsonl", std::ios::binary);
  for (uint64_t seed : RunSeeds(conf)) {
    auto r = RunServe(conf.serve, seed, trace.is_open() ? &trace : nullptr);
    if (!r.ok()) return r.status();
    const EpisodeMetrics& m = r->eval;
    int64_t dropped = 0;
    for (const auto& w : m.windows) {
      dropped += w.dropped;
      RAFIKI_RETURN_IF_ERROR(metrics.AddRow(
          {absl::StrCat(seed), CsvNumber(w.t0), CsvNumber(w.rate), absl::StrCat(w.arriving),
           absl::StrCat(w.completed), absl::StrCat(w.overdue), absl::StrCat(w.dropped),
           CsvNumber(w.mean_accuracy()), CsvNumber(w.mean_latency()),
           absl::StrCat(w.queued_end), absl::StrCat(w.inflight_end)}));
    }
    for (size_t i = 0; i < r->train_rewards.size(); ++i) {
      RAFIKI_RETURN_IF_ERROR(train.AddRow(
          {absl::StrCat(seed), absl::StrCat(i), CsvNumber(r->train_rewards[i])}));
    }
    const auto low = m.LowRateWindows(0.25);
    RAFIKI_RETURN_IF_ERROR(summary.AddRow(
        {absl::StrCat(seed), CsvNumber(m.MeanAccuracy()), CsvNumber(m.OverduePerSec()),
         CsvNumber(m.MeanAccuracy(low)), CsvNumber(m.OverduePerSec(low)),
         CsvNumber(dropped / m.duration), CsvNumber(m.total_arriving() / m.duration),
         CsvNumber(r->eval_reward)}));
    if (r->agent) {
      RAFIKI_RETURN_IF_ERROR(
          r->agent->Save((dir / absl::StrCat("policy_", seed, ".bin")).string()));
    }
  }
  RAFIKI_RETURN_IF_ERROR(metrics.Write((dir / "metrics.csv").string()));
  if (conf.serve.dispatcher == "rl") {
    RAFIKI_RETURN_IF_ERROR(train.Write((dir / "train.csv").string()));
  }
  return summary.Write((dir / "summary.csv").string());
}

double SignTestP(int wins, int losses) {
  const int n = wins + losses;
  if (n == 0) return 1.0;
  boost::math::binomial_distribution<double> dist(n, 0.5);
  const double tail = boost::math::cdf(dist, std::min(wins, losses));
  return std::min(1.0, 2.0 * tail);
}

namespace {

struct RunDir {
  std::string path;
  std::string command;
  std::map<std::string, std::string> echo;  // section.key -> JSON text
  std::vector<std::string> header;
  std::map<uint64_t, std::vector<std::string>> summary;
};

absl::StatusOr<RunDir> LoadRunDir(const std::string& path) {
  RunDir run;
  run.path = path;
  auto run_text = ReadText(fs::path(path) / "run.json");
  if (!run_text.ok()) return run_text.status();
  auto conf_text = ReadText(fs::path(path) / "config.json");
  if (!conf_text.ok()) return conf_text.status();
  auto sum_text = ReadText(fs::path(path) / "summary.csv");
  if (!sum_text.ok()) return sum_text.status();
  try {
    run.command = json::parse(*run_text).at("command").get<std::string>();
    const json echo = json::parse(*conf_text);
    for (const auto& [section, body] : echo.items()) {
      for (const auto& [key, value] : body.items()) {
        run.echo[absl::StrCat(section, ".", key)] = value.dump();
      }
    }
  } catch (const json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("MalformedRun: ", path, ": ", e.what()));
  }
  auto rows = ParseCsv(*sum_text);
  if (!rows.ok()) return rows.status();
  if (rows->empty() || rows->front().empty() || rows->front()[0] != "seed") {
    return absl::InvalidArgumentError(
        absl::StrCat("MalformedRun: ", path, ": summary.csv lacks a seed column"));
  }
  run.header = rows->front();
  for (size_t i = 1; i < rows->size(); ++i) {
    uint64_t seed;
    if (!absl::SimpleAtoi((*rows)[i][0], &seed)) {
      return absl::InvalidArgumentError(absl::StrCat("MalformedRun: ", path, ": bad seed"));
    }
    run.summary[seed] = (*rows)[i];
  }
  return run;
}

bool Prefixed(const std::string& key, const std::string& prefix) {
  return key.rfind(prefix, 0) == 0;
}

absl::StatusOr<CompareReport> CompareLoaded(const RunDir& a, const RunDir& b,
                                            const std::vector<std::string>& vary) {
  if (a.command != b.command) {
    return absl::FailedPreconditionError(absl::StrCat(
        "IncompatibleRuns: ", a.path, " ran ", a.command, " but ", b.path, " ran ", b.command));
  }
  std::set<std::string> allowed(vary.begin(), vary.end());
  if (allowed.empty()) {
    allowed = {"study.mode", "advisor.kind", "workload.dispatcher", "rl.beta"};
  }
  auto dispatcher = [](const RunDir& r) {
    auto it = r.echo.find("workload.dispatcher");
    return it == r.echo.end() ? std::string() : it->second;
  };
  const bool ignore_rl = dispatcher(a) != dispatcher(b);
  CompareReport report;
  std::vector<std::string> blocking;
  std::set<std::string> keys;
  for (const auto& [k, v] : a.echo) keys.insert(k);
  for (const auto& [k, v] : b.echo) keys.insert(k);
  for (const auto& k : keys) {
    auto ia = a.echo.find(k);
    auto ib = b.echo.find(k);
    if (ia != a.echo.end() && ib != b.echo.end() && ia->second == ib->second) continue;
    if (Prefixed(k, "run.") || Prefixed(k, "output.")) continue;
    if (ignore_rl && Prefixed(k, "rl.")) continue;
    report.differing.push_back(k);
    if (!allowed.count(k)) blocking.push_back(k);
  }
  if (!blocking.empty()) {
    return absl::FailedPreconditionError(absl::StrCat(
        "IncompatibleRuns: ", a.path, " and ", b.path, " differ on ",
        absl::StrJoin(blocking, ", ")));
  }
  for (size_t c = 1; c < a.header.size(); ++c) {
    auto it = std::find(b.header.begin(), b.header.end(), a.header[c]);
    if (it == b.header.end()) continue;
    const size_t cb = it - b.header.begin();
    CompareRow row;
    row.metric = a.header[c];
    for (const auto& [seed, ra] : a.summary) {
      auto jb = b.summary.find(seed);
      if (jb == b.summary.end()) continue;
      double va, vb;
      if (c >= ra.size() || cb >= jb->second.size() || !absl::SimpleAtod(ra[c], &va) ||
          !absl::SimpleAtod(jb->second[cb], &vb)) {
        continue;
      }
      ++row.pairs;
      row.mean_a += va;
      row.mean_b += vb;
      row.mean_delta += vb - va;
      if (vb > va) ++row.wins;
      if (vb < va) ++row.losses;
    }
    if (row.pairs > 0) {
      row.mean_a /= row.pairs;
      row.mean_b /= row.pairs;
      row.mean_delta /= row.pairs;
    }
    row.sign_p = SignTestP(row.wins, row.losses);
    report.rows.push_back(row);
  }
  return report;
}

// Curves averaged over seeds: best-so-far p by trial count for tune runs,
// per-window accuracy and overdue for serve runs.
absl::Status AppendSeries(const RunDir& run, const std::string& label, CsvTable& out) {
  if (run.command == "tune") {
    auto text = ReadText(fs::path(run.path) / "trials.csv");
    if (!text.ok()) return absl::OkStatus();
    auto rows = ParseCsv(*text);
    if (!rows.ok()) return rows.status();
    std::map<std::string, std::vector<double>> by_seed;
    for (size_t i = 1; i < rows->size(); ++i) {
      double p;
      if ((*rows)[i].size() < 5 || !absl::SimpleAtod((*rows)[i][4], &p)) continue;
      by_seed[(*rows)[i][0]].push_back(p);
    }
    std::map<size_t, std::pair<double, int>> curve;
    for (const auto& [seed, ps] : by_seed) {
      double best = 0.0;
      for (size_t k = 0; k < ps.size(); ++k) {
        best = std::max(best, ps[k]);
        curve[k + 1].first += best;
        curve[k + 1].second += 1;
      }
    }
    for (const auto& [k, acc] : curve) {
      RAFIKI_RETURN_IF_ERROR(out.AddRow({label, "best_p", absl::StrCat(k),
                                         CsvNumber(acc.first / acc.second)}));
    }
    return absl::OkStatus();
  }
  auto text = ReadText(fs::path(run.path) / "metrics.csv");
  if (!text.ok()) return absl::OkStatus();
  auto rows = ParseCsv(*text);
  if (!rows.ok()) return rows.status();
  std::map<std::string, std::pair<double, int>> acc, over;
  std::vector<std::string> order;
  for (size_t i = 1; i < rows->size(); ++i) {
    const auto& r = (*rows)[i];
    if (r.size() < 8) continue;
    double a, o;
    if (!absl::SimpleAtod(r[7], &a) || !absl::SimpleAtod(r[5], &o)) continue;
    if (!acc.count(r[1])) order.push_back(r[1]);
    acc[r[1]].first += a;
    acc[r[1]].second += 1;
    over[r[1]].first += o;
    over[r[1]].second += 1;
  }
  for (const auto& t : order) {
    RAFIKI_RETURN_IF_ERROR(
        out.AddRow({label, "accuracy", t, CsvNumber(acc[t].first / acc[t].second)}));
    RAFIKI_RETURN_IF_ERROR(
        out.AddRow({label, "overdue", t, CsvNumber(over[t].first / over[t].second)}));
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<CompareReport> CompareRuns(const std::string& dir_a, const std::string& dir_b,
                                          const std::vector<std::string>& vary) {
  auto a = LoadRunDir(dir_a);
  if (!a.ok()) return a.status();
  auto b = LoadRunDir(dir_b);
  if (!b.ok()) return b.status();
  return CompareLoaded(*a, *b, vary);
}

absl::Status CmdCompare(const std::vector<std::string>& dirs, const std::string& out_dir,
                        const std::vector<std::string>& vary) {
  if (dirs.size() < 2) return absl::InvalidArgumentError("compare needs at least two run dirs");
  std::vector<RunDir> runs;
  for (const auto& d : dirs) {
    auto r = LoadRunDir(d);
    if (!r.ok()) return r.status();
    runs.push_back(*std::move(r));
  }
  CsvTable table({"baseline", "run", "metric", "pairs", "mean_baseline", "mean_run",
                  "mean_delta", "wins", "losses", "sign_p"});
  std::ostringstream md;
  md << "# Comparison\n\nBaseline: `" << runs[0].path << "`\n";
  for (size_t i = 1; i < runs.size(); ++i) {
    auto report = CompareLoaded(runs[0], runs[i], vary);
    if (!report.ok()) return report.status();
    md << "\n## " << runs[i].path << "\n\n";
    md << "Differs on: "
       << (report->differing.empty() ? "nothing" : absl::StrJoin(report->differing, ", "))
       << "\n\n";
    md << "| metric | pairs | baseline | run | delta | wins | losses | sign p |\n";
    md << "|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : report->rows) {
      md << "| " << r.metric << " | " << r.pairs << " | " << CsvNumber(r.mean_a) << " | "
         << CsvNumber(r.mean_b) << " | " << CsvNumber(r.mean_delta) << " | " << r.wins
         << " | " << r.losses << " | " << CsvNumber(r.sign_p) << " |\n";
      RAFIKI_RETURN_IF_ERROR(table.AddRow(
          {runs[0].path, runs[i].path, r.metric, absl::StrCat(r.pairs), CsvNumber(r.mean_a),
           CsvNumber(r.mean_b), CsvNumber(r.mean_delta), absl::StrCat(r.wins),
           absl::StrCat(r.losses), CsvNumber(r.sign_p)}));
    }
  }
  CsvTable series({"run", "series", "x", "value"});
  for (const auto& r : runs) RAFIKI_RETURN_IF_ERROR(AppendSeries(r, r.path, series));

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) return absl::InternalError(absl::StrCat("cannot create ", out_dir, ": ", ec.message()));
  RAFIKI_RETURN_IF_ERROR(table.Write((fs::path(out_dir) / "compare.csv").string()));
  RAFIKI_RETURN_IF_ERROR(series.Write((fs::path(out_dir) / "series.csv").string()));
  return WriteText(fs::path(out_dir) / "compare.md", md.str());
}

}  // namespace rafiki
