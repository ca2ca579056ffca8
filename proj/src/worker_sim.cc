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

#include <chrono>
#include <thread>

#include "absl/strings/str_cat.h"

namespace rafiki {

TrialRunner::TrialRunner(const SyntheticTask& task, const ParamStore* store,
                         SigFn sig, WorkerConf conf, Trial trial)
    : task_(task), conf_(conf), trial_(std::move(trial)) {
  sig_ = sig ? sig(trial_.assignment) : ShapeSig{};
  if (trial_.origin.kind == TrialOrigin::Kind::kWarm && store != nullptr) {
    if (auto match = store->GetMatching(sig_)) {
      credit_ = task_.WarmStartCredit(trial_.assignment, match->DonorPerf(),
                                      store->BestPerf().value_or(0.0),
                                      match->Coverage());
    }
  }
}

double TrialRunner::RunEpoch() {
  ++epoch_;
  const double p = task_.LearningCurve(trial_.assignment, trial_.trial_id, epoch_,
                                       credit_.warm_e0, credit_.deficit);
  if (epoch_ == 1 || p > best_p_) {
    best_p_ = p;
    best_epoch_ = epoch_;
  }
  plateau_.Add(p, conf_.early_stop);
  return p;
}

bool TrialRunner::LocallyDone() const {
  return epoch_ >= conf_.max_epochs || plateau_.Plateaued(conf_.early_stop);
}

absl::StatusOr<ParamBlob> TrialRunner::Checkpoint() const {
  if (epoch_ == 0) {
    return absl::FailedPreconditionError(
        absl::StrCat("NoProgress: trial ", trial_.trial_id, " has no epochs"));
  }
  return ParamBlob{sig_, SimulatedPayload(sig_, trial_.trial_id, best_epoch_),
                   best_p_, trial_.trial_id};
}

TrialRecord TrialRunner::Record(WorkerId worker) const {
  return TrialRecord{trial_, best_p_, worker, epoch_};
}

SimCluster::SimCluster(int num_workers, const SyntheticTask& task,
                       ParamStore* store, SigFn sig, WorkerConf conf)
    : task_(task), store_(store), sig_(std::move(sig)), conf_(conf),
      workers_(num_workers) {
  for (WorkerId w = 0; w < num_workers; ++w) Emit(WireMessage::Request(w));
}

void SimCluster::Emit(const WireMessage& msg) {
  outbox_.push_back(EncodeFrame(msg));
}

void SimCluster::FinishTrial(WorkerId w) {
  Worker& worker = workers_[w];
  finished_.push_back(worker.runner->Record(w));
  worker.last_finished.reset();
  worker.last_finished.emplace(std::move(*worker.runner));
  worker.runner.reset();
  Emit(WireMessage::Finish(w));
  Emit(WireMessage::Request(w));
}

void SimCluster::Settle() {
  for (WorkerId w = 0; w < static_cast<WorkerId>(workers_.size()); ++w) {
    Worker& worker = workers_[w];
    if (!worker.awaiting_settle) continue;
    worker.awaiting_settle = false;
    if (!worker.runner) continue;
    if (worker.runner->stopped() || worker.runner->LocallyDone()) {
      FinishTrial(w);
    } else {
      wakes_.push(Wake{now_ + conf_.epoch_seconds, seq_++, w});
    }
  }
}

absl::StatusOr<WireMessage> SimCluster::Recv() {
  Settle();
  while (outbox_.empty()) {
    if (wakes_.empty()) return TransportClosedError("no active simulated worker");
    const Wake wake = wakes_.top();
    wakes_.pop();
    Worker& worker = workers_[wake.worker];
    if (!worker.runner) continue;
    now_ = wake.time;
    const double p = worker.runner->RunEpoch();
    const Trial& trial = worker.runner->trial();
    progress_.push_back(EpochEvent{now_, wake.worker, trial.trial_id,
                                   worker.runner->epoch(), p, trial.origin});
    Emit(WireMessage::Report(wake.worker, p, trial));
    worker.awaiting_settle = true;
  }
  auto frame = DecodeFrame(outbox_.front());
  outbox_.pop_front();
  if (!frame.ok()) return frame.status();
  if (auto* msg = std::get_if<WireMessage>(&*frame)) return *msg;
  return absl::InternalError("worker emitted a directive");
}

absl::Status SimCluster::Checkpoint(const TrialRunner& runner) {
  auto blob = runner.Checkpoint();
  if (!blob.ok()) return blob.status();
  if (store_ == nullptr) return absl::OkStatus();
  auto put = store_->Put(*std::move(blob));
  if (!put.ok()) return put.status();
  if (put->stored) ++puts_stored_;
  return absl::OkStatus();
}

absl::Status SimCluster::Send(const MasterDirective& directive) {
  auto frame = DecodeFrame(EncodeFrame(directive));
  if (!frame.ok()) return frame.status();
  const auto& d = std::get<MasterDirective>(*frame);
  if (d.target < 0 || d.target >= static_cast<WorkerId>(workers_.size())) {
    return absl::NotFoundError(absl::StrCat("no simulated worker ", d.target));
  }
  Worker& worker = workers_[d.target];
  switch (d.kind) {
    case DirectiveKind::kSendTrial:
      worker.runner.emplace(task_, store_, sig_, conf_, *d.trial);
      wakes_.push(Wake{now_ + conf_.epoch_seconds, seq_++, d.target});
      break;
    case DirectiveKind::kStop:
      if (worker.runner) worker.runner->Stop();
      break;
    case DirectiveKind::kPut:
      if (worker.runner && worker.runner->epoch() > 0) {
        return Checkpoint(*worker.runner);
      }
      if (worker.last_finished) return Checkpoint(*worker.last_finished);
      break;
    case DirectiveKind::kShutdown:
      worker.shut_down = true;
      break;
  }
  return absl::OkStatus();
}

std::optional<double> SimCluster::TimeToReach(double target) const {
  for (const auto& e : progress_) {
    if (e.p >= target) return e.time;
  }
  return std::nullopt;
}

absl::StatusOr<WorkerSummary> RunWorker(WorkerId id, Connection& conn,
                                        const SyntheticTask& task,
                                        ParamStore* store, SigFn sig,
                                        WorkerConf conf, int epoch_wall_ms) {
  WorkerSummary summary;
  std::optional<TrialRunner> last;
  auto checkpoint = [&](const TrialRunner& runner) -> absl::Status {
    auto blob = runner.Checkpoint();
    if (!blob.ok()) return blob.status();
    ++summary.checkpoints;
    if (store == nullptr) return absl::OkStatus();
    return store->Put(*std::move(blob)).status();
  };
  if (auto s = conn.Send(WireMessage::Request(id)); !s.ok()) return s;
  bool shutdown = false;
  while (!shutdown) {
    auto frame = conn.Recv();
    if (!frame.ok()) {
      if (IsTransportClosed(frame.status())) return summary;
      return frame.status();
    }
    const auto* d = std::get_if<MasterDirective>(&*frame);
    if (d == nullptr) return absl::InvalidArgumentError("worker received a message");
    if (d->kind == DirectiveKind::kShutdown) break;
    if (d->kind == DirectiveKind::kPut && last) {
      if (auto s = checkpoint(*last); !s.ok()) return s;
    }
    if (d->kind != DirectiveKind::kSendTrial) continue;

    TrialRunner runner(task, store, sig, conf, *d->trial);
    ++summary.trials;
    while (true) {
      const double p = runner.RunEpoch();
      ++summary.epochs;
      if (auto s = conn.Send(WireMessage::Report(id, p, runner.trial())); !s.ok()) {
        summary.aborted = true;
        return summary;
      }
      if (epoch_wall_ms > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(epoch_wall_ms));
      }
      while (true) {
        auto next = conn.TryRecv();
        if (!next.ok()) {
          summary.aborted = true;
          return summary;
        }
        if (!next->has_value()) break;
        const auto* dd = std::get_if<MasterDirective>(&**next);
        if (dd == nullptr) continue;
        if (dd->kind == DirectiveKind::kStop) runner.Stop();
        if (dd->kind == DirectiveKind::kPut) {
          if (auto s = checkpoint(runner); !s.ok()) return s;
        }
        if (dd->kind == DirectiveKind::kShutdown) shutdown = true;
      }
      if (runner.stopped() || runner.LocallyDone() || shutdown) break;
    }
    if (auto s = conn.Send(WireMessage::Finish(id)); !s.ok()) return summary;
    last.reset();
    last.emplace(std::move(runner));
    if (shutdown) break;
    if (auto s = conn.Send(WireMessage::Request(id)); !s.ok()) return summary;
  }
  return summary;
}

}  // namespace rafiki
