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

// Master event loops for independent (Study) and collaborative (CoStudy)
// hyper-parameter tuning.
//
// Each step consumes one worker message and returns the directives it
// triggers, all addressed to the sender. Study:
//   kRequest  next trial, or Shutdown once the advisor is exhausted or the
//             trial budget is fully issued
//   kReport   collect
//   kFinish   num += 1; kPut if the worker holds the best trial
// CoStudy differs on kReport: kPut when p beats best_p by more than delta,
// otherwise kStop when the worker's trial has plateaued. Its kRequest picks
// random or warm initialization with the alpha-greedy rule.

#ifndef RAFIKI_STUDY_MASTER_H_
#define RAFIKI_STUDY_MASTER_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "rafiki/advisor.h"
#include "rafiki/param_store.h"
#include "rafiki/transport.h"
#include "rafiki/wire.h"

namespace rafiki {

enum class StudyMode { kStudy, kCoStudy };

absl::StatusOr<StudyMode> ParseStudyMode(std::string_view name);
std::string_view StudyModeName(StudyMode mode);

struct StudyConf {
  int64_t max_trials = 20;
  double delta = 0.005;
  int patience = 5;
  double min_improve = 0.0;
  AlphaSchedule alpha;
  // Optional budget on the endpoint clock; once spent the master drains.
  std::optional<double> max_seconds;
  // Optional quality stop: the master drains after the first report >= it.
  std::optional<double> target_p;

  EarlyStopConf early_stop() const { return {patience, min_improve}; }
};

enum class Phase { kRunning, kDraining, kDone };

using SigFn = std::function<ShapeSig(const Assignment&)>;

struct StudyState {
  int64_t num = 0;     // finished trials
  int64_t issued = 0;  // trials handed out
  double best_p = 0.0;
  Phase phase = Phase::kRunning;
  TrialAdvisor* advisor = nullptr;

  // Warm-start inputs, used by CoStudy only. Without a store every trial
  // starts from random initialization.
  const ParamStore* store = nullptr;
  SigFn sig;
  Rng init_rng;

  static StudyState Make(TrialAdvisor* advisor, const ParamStore* store = nullptr,
                         SigFn sig = {}, uint64_t init_seed = 0);
};

absl::StatusOr<std::vector<MasterDirective>> StudyStep(StudyState& state,
                                                       const WireMessage& msg,
                                                       const StudyConf& conf);

absl::StatusOr<std::vector<MasterDirective>> CoStudyStep(StudyState& state,
                                                         const WireMessage& msg,
                                                         const StudyConf& conf);

struct AuditEntry {
  double time = 0.0;
  WireMessage msg;
  std::vector<MasterDirective> directives;

  bool operator==(const AuditEntry&) const = default;
};

struct StudyOutcome {
  TrialRecord best;
  std::vector<AuditEntry> log;
  StudyState final_state;
  double elapsed = 0.0;  // endpoint clock at termination
};

// Drives the step function over the endpoint until the study is done.
// TransportClosed if the endpoint runs dry first.
absl::StatusOr<StudyOutcome> RunStudy(const StudyConf& conf, StudyState state,
                                      MasterEndpoint& endpoint, StudyMode mode);

}  // namespace rafiki

#endif  // RAFIKI_STUDY_MASTER_H_
