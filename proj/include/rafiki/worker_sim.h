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

// Simulated tuning workers.
//
// A worker requests a trial, trains it epoch by epoch on the synthetic task,
// reports every epoch and finishes on kStop, on its own plateau test, or at
// max_epochs. A kPut makes it checkpoint its best epoch into the parameter
// store. Per trial the worker emits kRequest (kReport)+ kFinish.
//
// SimCluster runs any number of workers under a virtual clock as a
// MasterEndpoint; RunWorker drives one worker over a real Connection.

#ifndef RAFIKI_WORKER_SIM_H_
#define RAFIKI_WORKER_SIM_H_

#include <cstdint>
#include <deque>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "rafiki/advisor.h"
#include "rafiki/param_store.h"
#include "rafiki/study_master.h"
#include "rafiki/task.h"
#include "rafiki/transport.h"

namespace rafiki {

struct WorkerConf {
  int max_epochs = 10;
  EarlyStopConf early_stop;
  double epoch_seconds = 1.0;
};

// One training run as seen by a worker.
class TrialRunner {
 public:
  TrialRunner(const SyntheticTask& task, const ParamStore* store, SigFn sig,
              WorkerConf conf, Trial trial);

  // Trains one more epoch and returns its performance.
  double RunEpoch();
  // Local termination: plateau or epoch cap.
  bool LocallyDone() const;
  void Stop() { stopped_ = true; }
  bool stopped() const { return stopped_; }

  // Best epoch so far as a parameter blob. NoProgress (FailedPrecondition)
  // before the first epoch.
  absl::StatusOr<ParamBlob> Checkpoint() const;
  TrialRecord Record(WorkerId worker) const;

  const Trial& trial() const { return trial_; }
  int epoch() const { return epoch_; }
  double best_p() const { return best_p_; }
  const WarmCredit& credit() const { return credit_; }

 private:
  const SyntheticTask& task_;
  WorkerConf conf_;
  Trial trial_;
  ShapeSig sig_;
  WarmCredit credit_;
  PlateauTracker plateau_;
  int epoch_ = 0;
  int best_epoch_ = 0;
  double best_p_ = 0.0;
  bool stopped_ = false;
};

struct EpochEvent {
  double time = 0.0;
  WorkerId worker = -1;
  int64_t trial_id = -1;
  int epoch = 0;
  double p = 0.0;
  TrialOrigin origin;
};

// Deterministic in-process cluster. Frames pass through the wire codec in
// both directions. Worker messages are ordered by simulated time, then by
// emission order.
class SimCluster : public MasterEndpoint {
 public:
  SimCluster(int num_workers, const SyntheticTask& task, ParamStore* store,
             SigFn sig, WorkerConf conf);

  absl::StatusOr<WireMessage> Recv() override;
  absl::Status Send(const MasterDirective& directive) override;
  double Now() const override { return now_; }

  const std::vector<EpochEvent>& progress() const { return progress_; }
  // Finished trials in finish order.
  const std::vector<TrialRecord>& finished() const { return finished_; }
  // First time any epoch reached `target`, if ever.
  std::optional<double> TimeToReach(double target) const;
  int64_t puts_stored() const { return puts_stored_; }

 private:
  struct Worker {
    std::optional<TrialRunner> runner;
    bool awaiting_settle = false;  // last report not yet answered
    bool shut_down = false;
    std::optional<TrialRunner> last_finished;
  };
  struct Wake {
    double time;
    uint64_t seq;
    WorkerId worker;
    bool operator>(const Wake& o) const {
      return time != o.time ? time > o.time : seq > o.seq;
    }
  };

  void Emit(const WireMessage& msg);
  void Settle();
  void FinishTrial(WorkerId w);
  absl::Status Checkpoint(const TrialRunner& runner);

  const SyntheticTask& task_;
  ParamStore* store_;
  SigFn sig_;
  WorkerConf conf_;
  std::vector<Worker> workers_;
  std::deque<std::string> outbox_;  // encoded frames
  std::priority_queue<Wake, std::vector<Wake>, std::greater<Wake>> wakes_;
  uint64_t seq_ = 0;
  double now_ = 0.0;
  std::vector<EpochEvent> progress_;
  std::vector<TrialRecord> finished_;
  int64_t puts_stored_ = 0;
};

struct WorkerSummary {
  int trials = 0;
  int epochs = 0;
  int checkpoints = 0;
  bool aborted = false;  // transport closed mid-trial
};

// Worker loop over a real connection: runs until Shutdown or the transport
// closes. `epoch_wall_ms` sleeps between epochs so directives can arrive.
absl::StatusOr<WorkerSummary> RunWorker(WorkerId id, Connection& conn,
                                        const SyntheticTask& task,
                                        ParamStore* store, SigFn sig,
                                        WorkerConf conf, int epoch_wall_ms = 0);

}  // namespace rafiki

#endif  // RAFIKI_WORKER_SIM_H_
