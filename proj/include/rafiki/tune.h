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

// One complete simulated tuning run: space, task, advisor, parameter store,
// simulated workers and the master loop, all seeded from one root seed.

#ifndef RAFIKI_TUNE_H_
#define RAFIKI_TUNE_H_

#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "rafiki/advisor.h"
#include "rafiki/hyperspace.h"
#include "rafiki/study_master.h"
#include "rafiki/task.h"
#include "rafiki/worker_sim.h"

namespace rafiki {

struct TuneConfig {
  StudyMode mode = StudyMode::kStudy;
  AdvisorKind advisor = AdvisorKind::kRandom;
  BayesOptConfig bayes;
  StudyConf study;
  TaskConfig task;
  WorkerConf worker;
  int workers = 4;
  std::vector<std::string> arch_knobs = {"n_conv", "width", "kernel"};
  std::string store_ns = "default";
  // Non-empty: workers run on threads and talk to the master over a
  // Unix-domain socket at this path. Wall-clock timing, not deterministic.
  std::string listen;
};

struct TuneResult {
  StudyOutcome outcome;
  std::vector<EpochEvent> progress;
  std::vector<TrialRecord> finished;
  std::optional<double> time_to_target;
  int64_t puts_stored = 0;
  int gp_fits = 0;
};

// The task seed, advisor seed and warm-start seed are derived from `seed`,
// so one seed fixes the whole run. conf.task.seed is ignored.
absl::StatusOr<TuneResult> RunTune(const HyperSpace& space, const TuneConfig& conf,
                                   uint64_t seed,
                                   std::optional<double> target = std::nullopt);

// Surrogate ConvNet space: lr, decay (capped by lr), momentum, dropout,
// n_conv, width, kernel.
std::vector<KnobDef> SurrogateKnobs();

}  // namespace rafiki

#endif  // RAFIKI_TUNE_H_
