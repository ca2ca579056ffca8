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

// One serving scenario end to end: profiles, ensemble table, workload anchor,
// dispatcher, optional RL training, and a final evaluation episode.

#ifndef RAFIKI_SERVE_H_
#define RAFIKI_SERVE_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "rafiki/inference.h"
#include "rafiki/rl.h"
#include "rafiki/workload.h"

namespace rafiki {

enum class RateAnchor { kMax, kMin };

absl::StatusOr<RateAnchor> ParseRateAnchor(std::string_view name);

// r_u / r_l. One model: max_b and min_b of b / c(b). Several models: the
// async sum and the sync straggler throughput.
double AnchorRate(const std::vector<ModelProfile>& models,
                  const std::vector<int>& batch_sizes, RateAnchor anchor);

struct ServeConfig {
  std::vector<ModelProfile> models = ServingTrio();
  // Empty: derive by vote simulation with `vote` and `table_seed`.
  std::vector<double> table;
  VoteSimConfig vote;
  uint64_t table_seed = 1;
  BatchingConf batching{DefaultBatchSizes(), 1.0, 0.1};
  RateAnchor anchor = RateAnchor::kMax;
  WorkloadConf workload;
  std::string dispatcher = "rl";
  RlConfig rl;
};

struct ServeResult {
  std::vector<double> train_rewards;  // per training episode
  EpisodeMetrics eval;
  double eval_reward = 0.0;
  std::unique_ptr<ActorCritic> agent;
};

absl::StatusOr<ServingScenario> BuildScenario(const ServeConfig& conf);

absl::StatusOr<std::unique_ptr<Dispatcher>> MakeBaseline(const ServeConfig& conf);

// RL trains for rl.train_episodes episodes, each with its own arrival seed,
// then runs one frozen greedy-policy episode. Baselines run the evaluation
// episode only. Conservation is checked on every episode.
absl::StatusOr<ServeResult> RunServe(const ServeConfig& conf, uint64_t seed,
                                     std::ostream* trace = nullptr);

}  // namespace rafiki

#endif  // RAFIKI_SERVE_H_
