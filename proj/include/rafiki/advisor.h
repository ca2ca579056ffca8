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

// Trial advisors: the search strategies behind the study masters.
//
// An advisor hands out trials to workers (Next), ingests per-epoch
// performance reports (Collect) and answers the bookkeeping questions the
// masters ask: which trial is best, whether a worker holds it, and whether a
// worker's running trial has plateaued.

#ifndef RAFIKI_ADVISOR_H_
#define RAFIKI_ADVISOR_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "rafiki/gp.h"
#include "rafiki/hyperspace.h"
#include "rafiki/random.h"

namespace rafiki {

using WorkerId = int32_t;

struct TrialRecord {
  Trial trial;
  double p = 0.0;  // best performance reported so far, higher is better
  WorkerId worker = -1;
  int epochs_used = 0;
};

struct EarlyStopConf {
  int patience = 5;
  double min_improve = 0.0;
};

// Plateau test shared by the master and the workers: true once `patience`
// consecutive reports failed to rise above the best report by at least
// `min_improve`. The first report always counts as an improvement, so at
// least patience + 1 reports are needed.
class PlateauTracker {
 public:
  void Reset();
  void Add(double p, const EarlyStopConf& conf);
  bool Plateaued(const EarlyStopConf& conf) const {
    return reports_ > 0 && since_improvement_ >= conf.patience;
  }
  int reports() const { return reports_; }
  double best() const { return best_; }

 private:
  int reports_ = 0;
  int since_improvement_ = 0;
  double best_ = 0.0;
};

class TrialAdvisor {
 public:
  explicit TrialAdvisor(const HyperSpace& space, uint64_t seed);
  virtual ~TrialAdvisor() = default;

  TrialAdvisor(const TrialAdvisor&) = delete;
  TrialAdvisor& operator=(const TrialAdvisor&) = delete;

  // Next trial for `worker`, or nullopt once a finite space is exhausted. A
  // request also marks the worker's previous trial as completed.
  std::optional<Trial> Next(WorkerId worker);

  // Records one performance report. UnknownTrial (NotFound) if the trial id
  // was never issued.
  absl::Status Collect(WorkerId worker, double p, const Trial& trial);

  // Highest-p record; ties go to the earliest trial id. NotFound when empty.
  absl::StatusOr<TrialRecord> BestTrial() const;

  // Whether the worker's current (or just finished) trial is the global best.
  absl::StatusOr<bool> IsBest(WorkerId worker) const;

  absl::StatusOr<bool> EarlyStopping(WorkerId worker,
                                     const EarlyStopConf& conf) const;

  const HyperSpace& space() const { return space_; }
  // Per-trial records in issue order (trials without reports included).
  std::vector<TrialRecord> Records() const;
  size_t completed_count() const { return completed_.size(); }
  int64_t issued_count() const { return next_id_; }

 protected:
  // Strategy hook. `untried` is non-null for enumerable spaces and lists the
  // assignments not issued yet (never empty when called).
  virtual Assignment Propose(const std::vector<Assignment>* untried) = 0;

  // Trials whose worker has moved on, with their final best p.
  const std::vector<int64_t>& completed() const { return completed_; }
  const TrialRecord& record(int64_t trial_id) const {
    return records_.at(trial_id);
  }
  Rng& rng() { return rng_; }

 private:
  struct WorkerState {
    int64_t trial_id = -1;
    std::vector<double> reports;  // reports for trial_id, in order
  };

  const HyperSpace& space_;
  Rng rng_;
  int64_t next_id_ = 0;
  std::map<int64_t, TrialRecord> records_;
  std::map<WorkerId, WorkerState> workers_;
  std::vector<int64_t> completed_;
  std::optional<int64_t> best_id_;
  bool enumerable_ = false;
  std::vector<Assignment> untried_;
};

class RandomSearchAdvisor : public TrialAdvisor {
 public:
  using TrialAdvisor::TrialAdvisor;

 protected:
  Assignment Propose(const std::vector<Assignment>* untried) override;
};

struct BayesOptConfig {
  GpConfig gp;
  int n_init = 5;
  int n_cand = 1000;
};

// GP-based Bayesian optimization with expected improvement, maximized over a
// fresh set of random candidates each round.
class BayesOptAdvisor : public TrialAdvisor {
 public:
  BayesOptAdvisor(const HyperSpace& space, uint64_t seed, BayesOptConfig conf);

  // Candidate set, posteriors and choice of the most recent GP-guided
  // proposal; empty before the first one.
  struct ProposalTrace {
    std::vector<std::vector<double>> candidates;
    std::vector<GpPosterior> posteriors;
    double best_y = 0.0;
    size_t chosen = 0;
    std::vector<std::vector<double>> train_x;
    std::vector<double> train_y;
  };
  const ProposalTrace& last_proposal() const { return trace_; }
  int gp_fit_count() const { return gp_fits_; }
  const BayesOptConfig& config() const { return conf_; }

 protected:
  Assignment Propose(const std::vector<Assignment>* untried) override;

 private:
  BayesOptConfig conf_;
  int gp_fits_ = 0;
  ProposalTrace trace_;
};

enum class AdvisorKind { kRandom, kBayes };

absl::StatusOr<AdvisorKind> ParseAdvisorKind(std::string_view name);

std::unique_ptr<TrialAdvisor> MakeAdvisor(AdvisorKind kind,
                                          const HyperSpace& space,
                                          uint64_t seed,
                                          const BayesOptConfig& bayes = {});

}  // namespace rafiki

#endif  // RAFIKI_ADVISOR_H_
