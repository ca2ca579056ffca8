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

#include "rafiki/serve.h"

#include "absl/strings/str_cat.h"

namespace rafiki {

absl::StatusOr<RateAnchor> ParseRateAnchor(std::string_view name) {
  if (name == "max") return RateAnchor::kMax;
  if (name == "min") return RateAnchor::kMin;
  return absl::InvalidArgumentError(
      absl::StrCat("rate anchor must be max or min, got ", std::string(name)));
}

double AnchorRate(const std::vector<ModelProfile>& models,
                  const std::vector<int>& batch_sizes, RateAnchor anchor) {
  if (models.size() == 1) {
    return anchor == RateAnchor::kMax ? MaxThroughput(models[0], batch_sizes)
                                      : MinThroughput(models[0], batch_sizes);
  }
  return anchor == RateAnchor::kMax ? AsyncThroughput(models, batch_sizes)
                                    : SyncThroughput(models, batch_sizes);
}

absl::StatusOr<ServingScenario> BuildScenario(const ServeConfig& conf) {
  ServingScenario sc;
  sc.models = conf.models;
  sc.batching = conf.batching;
  sc.workload = conf.workload;
  if (conf.table.empty()) {
    Rng rng = MakeRng(conf.table_seed, "ensemble");
    sc.table = BuildEnsembleTable(sc.models, conf.vote, rng);
  } else {
    sc.table.accuracy = conf.table;
  }
  for (const auto& m : sc.models) {
    if (auto s = m.Validate(); !s.ok()) return s;
    for (int b : sc.batching.batch_sizes) {
      if (!m.Cost(b).ok()) {
        return absl::InvalidArgumentError(
            absl::StrCat("ConfigError: model ", m.name, " has no latency for b=", b));
      }
    }
  }
  const WorkloadConf w = sc.Resolved();
  sc.rate = SolveRateParams(AnchorRate(sc.models, sc.batching.batch_sizes, conf.anchor),
                            w.period);
  if (auto s = sc.Validate(); !s.ok()) return s;
  return sc;
}

absl::StatusOr<std::unique_ptr<Dispatcher>> MakeBaseline(const ServeConfig& conf) {
  if (conf.dispatcher == "greedy") {
    if (conf.models.size() != 1) {
      return absl::InvalidArgumentError("ConfigError: greedy dispatcher needs one model");
    }
    return std::make_unique<GreedyDispatcher>(conf.models, conf.batching);
  }
  if (conf.dispatcher == "sync") {
    return std::make_unique<SyncDispatcher>(conf.models, conf.batching);
  }
  if (conf.dispatcher == "async") {
    return std::make_unique<AsyncDispatcher>(conf.models, conf.batching);
  }
  return absl::InvalidArgumentError(
      absl::StrCat("ConfigError: unknown dispatcher ", conf.dispatcher));
}

absl::StatusOr<ServeResult> RunServe(const ServeConfig& conf, uint64_t seed,
                                     std::ostream* trace) {
  auto sc = BuildScenario(conf);
  if (!sc.ok()) return sc.status();
  ServeResult result;
  std::unique_ptr<Dispatcher> dispatcher;
  RlDispatcher* rl = nullptr;
  if (conf.dispatcher == "rl") {
    const bool single = sc->models.size() == 1;
    const int dim = conf.rl.queue_len +
                    (single ? 0
                            : static_cast<int>(sc->models.size() *
                                               (1 + sc->batching.batch_sizes.size())));
    result.agent = std::make_unique<ActorCritic>(
        dim, NumActions(sc->models.size(), sc->batching.batch_sizes.size()), conf.rl,
        DeriveSeed(seed, "rl"));
    auto d = std::make_unique<RlDispatcher>(result.agent.get(), sc->models, sc->table,
                                            sc->batching.batch_sizes, sc->batching.tau,
                                            conf.rl, seed, /*train=*/true);
    rl = d.get();
    dispatcher = std::move(d);
    for (int ep = 0; ep < conf.rl.train_episodes; ++ep) {
      auto m = RunEpisode(*dispatcher, *sc, DeriveSeed(seed, "episode", ep));
      if (!m.ok()) return m.status();
      if (auto s = m->CheckConservation(); !s.ok()) return s;
      result.train_rewards.push_back(rl->episode_reward());
    }
    rl->set_train(false);
  } else {
    auto d = MakeBaseline(conf);
    if (!d.ok()) return d.status();
    dispatcher = *std::move(d);
  }
  auto eval = RunEpisode(*dispatcher, *sc, DeriveSeed(seed, "eval"), trace);
  if (!eval.ok()) return eval.status();
  if (auto s = eval->CheckConservation(); !s.ok()) return s;
  result.eval = *std::move(eval);
  if (rl != nullptr) result.eval_reward = rl->episode_reward();
  return result;
}

}  // namespace rafiki
