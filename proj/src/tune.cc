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

#include "rafiki/tune.h"

#include <thread>

#include "absl/strings/str_cat.h"
#include "rafiki/param_store.h"
#include "rafiki/transport.h"

namespace rafiki {

absl::StatusOr<TuneResult> RunTune(const HyperSpace& space, const TuneConfig& conf,
                                   uint64_t seed, std::optional<double> target) {
  TaskConfig task_conf = conf.task;
  task_conf.seed = DeriveSeed(seed, "task");
  SyntheticTask task(space, task_conf);
  auto advisor = MakeAdvisor(conf.advisor, space, DeriveSeed(seed, "advisor"),
                             conf.bayes);
  ParamStore store(conf.store_ns);
  const std::vector<std::string> arch = conf.arch_knobs;
  SigFn sig = [&space, arch](const Assignment& h) { return ConvNetSig(space, h, arch); };

  WorkerConf worker = conf.worker;
  worker.early_stop = conf.study.early_stop();
  worker.max_epochs = task_conf.max_epochs;
  worker.epoch_seconds = task_conf.epoch_seconds;
  if (!conf.listen.empty()) {
    auto listener = SocketListener::Listen(conf.listen);
    if (!listener.ok()) return listener.status();
    std::vector<std::thread> threads;
    std::vector<absl::Status> worker_status(conf.workers);
    for (int w = 0; w < conf.workers; ++w) {
      threads.emplace_back([&, w] {
        auto conn = ConnectSocket(conf.listen);
        if (!conn.ok()) {
          worker_status[w] = conn.status();
          return;
        }
        auto summary = RunWorker(w, **conn, task, &store, sig, worker);
        if (!summary.ok()) worker_status[w] = summary.status();
        (*conn)->Close();
      });
    }
    MasterHub hub;
    absl::Status accept_status;
    for (int w = 0; w < conf.workers; ++w) {
      auto conn = (*listener)->Accept();
      if (!conn.ok()) {
        accept_status = conn.status();
        break;
      }
      hub.Attach(*std::move(conn));
    }
    absl::StatusOr<StudyOutcome> outcome = absl::UnavailableError("no workers attached");
    if (!accept_status.ok()) {
      outcome = accept_status;
    } else {
      StudyState state =
          StudyState::Make(advisor.get(), &store, sig, DeriveSeed(seed, "init"));
      outcome = RunStudy(conf.study, std::move(state), hub, conf.mode);
    }
    hub.CloseAll();
    for (auto& t : threads) t.join();
    if (!outcome.ok()) return outcome.status();
    for (const auto& s : worker_status) {
      if (!s.ok()) return s;
    }
    TuneResult result;
    result.outcome = *std::move(outcome);
    result.outcome.final_state.advisor = nullptr;
    result.outcome.final_state.store = nullptr;
    result.outcome.final_state.sig = nullptr;
    for (const auto& r : advisor->Records()) {
      if (r.epochs_used > 0) result.finished.push_back(r);
    }
    result.puts_stored = store.size();
    return result;
  }

  SimCluster cluster(conf.workers, task, &store, sig, worker);
  StudyState state =
      StudyState::Make(advisor.get(), &store, sig, DeriveSeed(seed, "init"));
  auto outcome = RunStudy(conf.study, std::move(state), cluster, conf.mode);
  if (!outcome.ok()) return outcome.status();

  TuneResult result;
  result.outcome = *std::move(outcome);
  result.outcome.final_state.advisor = nullptr;
  result.outcome.final_state.store = nullptr;
  result.outcome.final_state.sig = nullptr;
  result.progress = cluster.progress();
  result.finished = cluster.finished();
  result.puts_stored = cluster.puts_stored();
  if (target) result.time_to_target = cluster.TimeToReach(*target);
  if (auto* bo = dynamic_cast<BayesOptAdvisor*>(advisor.get())) {
    result.gp_fits = bo->gp_fit_count();
  }
  return result;
}

std::vector<KnobDef> SurrogateKnobs() {
  return {
      *DefineRange("lr", 1e-4, 1.0, DType::kFloat, {}, {}, /*log_scale=*/true),
      *DefineRange("decay", 1e-6, 1e-2, DType::kFloat, {"lr"}, "cap_decay",
                   /*log_scale=*/true),
      *DefineRange("momentum", 0.0, 0.99, DType::kFloat),
      *DefineRange("dropout", 0.0, 0.5, DType::kFloat),
      *DefineRange("n_conv", 1, 4, DType::kInteger),
      *DefineChoice("width", {int64_t{16}, int64_t{32}, int64_t{64}}),
      *DefineChoice("kernel", {int64_t{3}, int64_t{5}}),
  };
}

}  // namespace rafiki
