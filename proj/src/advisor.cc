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

#include <algorithm>
#include <cmath>

#include "absl/strings/str_cat.h"

namespace rafiki {
namespace {

// Finite spaces up to this size are enumerated so that exhaustion can be
// detected; larger ones are treated as unbounded.
constexpr uint64_t kMaxEnumerable = 100000;

}  // namespace

void PlateauTracker::Reset() { *this = PlateauTracker(); }

void PlateauTracker::Add(double p, const EarlyStopConf& conf) {
  if (reports_ == 0 || (p > best_ && p - best_ >= conf.min_improve)) {
    best_ = p;
    since_improvement_ = 0;
  } else {
    ++since_improvement_;
  }
  ++reports_;
}

TrialAdvisor::TrialAdvisor(const HyperSpace& space, uint64_t seed)
    : space_(space), rng_(seed) {
  if (space_.IsFinite() && space_.Cardinality() <= kMaxEnumerable) {
    enumerable_ = true;
    untried_ = space_.Enumerate();
  }
}

std::optional<Trial> TrialAdvisor::Next(WorkerId worker) {
  WorkerState& state = workers_[worker];
  if (state.trial_id >= 0 &&
      std::find(completed_.begin(), completed_.end(), state.trial_id) ==
          completed_.end()) {
    completed_.push_back(state.trial_id);
  }
  if (enumerable_ && untried_.empty()) return std::nullopt;

  Assignment assignment = Propose(enumerable_ ? &untried_ : nullptr);
  if (enumerable_) {
    auto it = std::find(untried_.begin(), untried_.end(), assignment);
    if (it != untried_.end()) untried_.erase(it);
  }
  Trial trial{next_id_++, std::move(assignment), TrialOrigin::Random()};
  records_[trial.trial_id] = TrialRecord{trial, 0.0, worker, 0};
  state.trial_id = trial.trial_id;
  state.reports.clear();
  return trial;
}

absl::Status TrialAdvisor::Collect(WorkerId worker, double p,
                                   const Trial& trial) {
  auto it = records_.find(trial.trial_id);
  if (it == records_.end()) {
    return absl::NotFoundError(
        absl::StrCat("UnknownTrial: trial ", trial.trial_id, " was never issued"));
  }
  if (!std::isfinite(p)) {
    return absl::InvalidArgumentError(
        absl::StrCat("non-finite performance for trial ", trial.trial_id));
  }
  TrialRecord& rec = it->second;
  rec.p = rec.epochs_used == 0 ? p : std::max(rec.p, p);
  ++rec.epochs_used;
  rec.worker = worker;

  WorkerState& state = workers_[worker];
  if (state.trial_id != trial.trial_id) {
    state.trial_id = trial.trial_id;
    state.reports.clear();
  }
  state.reports.push_back(p);

  if (!best_id_) {
    best_id_ = rec.trial.trial_id;
  } else {
    const TrialRecord& best = records_.at(*best_id_);
    if (rec.p > best.p || (rec.p == best.p && rec.trial.trial_id < *best_id_)) {
      best_id_ = rec.trial.trial_id;
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<TrialRecord> TrialAdvisor::BestTrial() const {
  if (!best_id_) return absl::NotFoundError("Empty: no trial reported yet");
  return records_.at(*best_id_);
}

absl::StatusOr<bool> TrialAdvisor::IsBest(WorkerId worker) const {
  auto it = workers_.find(worker);
  if (it == workers_.end() || it->second.trial_id < 0) {
    return absl::NotFoundError(
        absl::StrCat("UnknownWorker: worker ", worker, " holds no trial"));
  }
  return best_id_.has_value() && *best_id_ == it->second.trial_id;
}

absl::StatusOr<bool> TrialAdvisor::EarlyStopping(
    WorkerId worker, const EarlyStopConf& conf) const {
  auto it = workers_.find(worker);
  if (it == workers_.end()) {
    return absl::NotFoundError(
        absl::StrCat("UnknownWorker: worker ", worker, " never reported"));
  }
  PlateauTracker tracker;
  for (double p : it->second.reports) tracker.Add(p, conf);
  return tracker.Plateaued(conf);
}

std::vector<TrialRecord> TrialAdvisor::Records() const {
  std::vector<TrialRecord> out;
  out.reserve(records_.size());
  for (const auto& [id, rec] : records_) out.push_back(rec);
  return out;
}

Assignment RandomSearchAdvisor::Propose(const std::vector<Assignment>* untried) {
  if (untried != nullptr) {
    std::uniform_int_distribution<size_t> pick(0, untried->size() - 1);
    return (*untried)[pick(rng())];
  }
  return space().SampleAssignment(rng());
}

BayesOptAdvisor::BayesOptAdvisor(const HyperSpace& space, uint64_t seed,
                                 BayesOptConfig conf)
    : TrialAdvisor(space, seed), conf_(conf) {}

Assignment BayesOptAdvisor::Propose(const std::vector<Assignment>* untried) {
  std::vector<int64_t> observed;
  for (int64_t id : completed()) {
    if (record(id).epochs_used > 0) observed.push_back(id);
  }
  if (static_cast<int>(observed.size()) < conf_.n_init) {
    if (untried != nullptr) {
      std::uniform_int_distribution<size_t> pick(0, untried->size() - 1);
      return (*untried)[pick(rng())];
    }
    return space().SampleAssignment(rng());
  }

  ProposalTrace trace;
  trace.best_y = record(observed.front()).p;
  for (int64_t id : observed) {
    const TrialRecord& rec = record(id);
    trace.train_x.push_back(space().Encode(rec.trial.assignment));
    trace.train_y.push_back(rec.p);
    trace.best_y = std::max(trace.best_y, rec.p);
  }
  GaussianProcess gp(conf_.gp);
  ++gp_fits_;
  if (!gp.Fit(trace.train_x, trace.train_y).ok()) {
    // Degenerate data; fall back to exploration for this round.
    return space().SampleAssignment(rng());
  }

  std::vector<Assignment> pool;
  if (untried != nullptr && untried->size() <= static_cast<size_t>(conf_.n_cand)) {
    pool = *untried;
  } else if (untried != nullptr) {
    std::vector<size_t> idx(untried->size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng());
    for (int i = 0; i < conf_.n_cand; ++i) pool.push_back((*untried)[idx[i]]);
  } else {
    pool.reserve(conf_.n_cand);
    for (int i = 0; i < conf_.n_cand; ++i) {
      pool.push_back(space().SampleAssignment(rng()));
    }
  }
  for (const auto& a : pool) {
    trace.candidates.push_back(space().Encode(a));
    auto post = gp.Predict(trace.candidates.back());
    trace.posteriors.push_back(post.ok() ? *post : GpPosterior{});
  }
  trace.chosen = ArgmaxExpectedImprovement(trace.posteriors, trace.best_y);
  Assignment chosen = pool[trace.chosen];
  trace_ = std::move(trace);
  return chosen;
}

absl::StatusOr<AdvisorKind> ParseAdvisorKind(std::string_view name) {
  if (name == "random") return AdvisorKind::kRandom;
  if (name == "bayes") return AdvisorKind::kBayes;
  return absl::InvalidArgumentError(
      absl::StrCat("advisor must be \"random\" or \"bayes\", got \"", std::string(name), "\""));
}

std::unique_ptr<TrialAdvisor> MakeAdvisor(AdvisorKind kind,
                                          const HyperSpace& space,
                                          uint64_t seed,
                                          const BayesOptConfig& bayes) {
  if (kind == AdvisorKind::kBayes) {
    return std::make_unique<BayesOptAdvisor>(space, seed, bayes);
  }
  return std::make_unique<RandomSearchAdvisor>(space, seed);
}

}  // namespace rafiki
