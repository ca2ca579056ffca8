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

#include "rafiki/study_master.h"

#include "absl/strings/str_cat.h"

namespace rafiki {

absl::StatusOr<StudyMode> ParseStudyMode(std::string_view name) {
  if (name == "study") return StudyMode::kStudy;
  if (name == "costudy") return StudyMode::kCoStudy;
  return absl::InvalidArgumentError(
      absl::StrCat("study mode must be study or costudy, got ", std::string(name)));
}

std::string_view StudyModeName(StudyMode mode) {
  return mode == StudyMode::kStudy ? "study" : "costudy";
}

StudyState StudyState::Make(TrialAdvisor* advisor, const ParamStore* store,
                            SigFn sig, uint64_t init_seed) {
  StudyState state;
  state.advisor = advisor;
  state.store = store;
  state.sig = std::move(sig);
  state.init_rng = Rng(init_seed);
  return state;
}

namespace {

void UpdatePhase(StudyState& state, const StudyConf& conf,
                 const WireMessage& msg) {
  if (conf.target_p && msg.type == MsgType::kReport && *msg.p >= *conf.target_p &&
      state.phase == Phase::kRunning) {
    state.phase = Phase::kDraining;
  }
  if (state.num >= conf.max_trials ||
      (state.phase == Phase::kDraining && state.num == state.issued)) {
    state.phase = Phase::kDone;
  }
}

absl::Status CheckRunnable(const StudyState& state, const WireMessage& msg) {
  if (state.phase == Phase::kDone) {
    return absl::FailedPreconditionError("study already done");
  }
  if (state.advisor == nullptr) {
    return absl::FailedPreconditionError("study has no advisor");
  }
  return ValidateMessage(msg);
}

MasterDirective HandleRequest(StudyState& state, const WireMessage& msg,
                              const StudyConf& conf, bool warm_start) {
  if (state.phase == Phase::kRunning && state.issued >= conf.max_trials) {
    state.phase = Phase::kDraining;
  }
  if (state.phase != Phase::kRunning) return MasterDirective::Shutdown(msg.worker);
  std::optional<Trial> trial = state.advisor->Next(msg.worker);
  if (!trial) {
    state.phase = Phase::kDraining;
    return MasterDirective::Shutdown(msg.worker);
  }
  ++state.issued;
  if (warm_start && state.store != nullptr && state.sig) {
    InitChoice init = state.store->ChooseInit(
        state.sig(trial->assignment), conf.alpha.At(state.num), state.init_rng);
    if (init.warm) trial->origin = TrialOrigin::Warm(init.params->PrimarySource());
  }
  return MasterDirective::SendTrial(msg.worker, *std::move(trial));
}

}  // namespace

absl::StatusOr<std::vector<MasterDirective>> StudyStep(StudyState& state,
                                                       const WireMessage& msg,
                                                       const StudyConf& conf) {
  if (auto s = CheckRunnable(state, msg); !s.ok()) return s;
  std::vector<MasterDirective> out;
  switch (msg.type) {
    case MsgType::kRequest:
      out.push_back(HandleRequest(state, msg, conf, /*warm_start=*/false));
      break;
    case MsgType::kReport:
      if (auto s = state.advisor->Collect(msg.worker, *msg.p, *msg.trial); !s.ok()) {
        return s;
      }
      break;
    case MsgType::kFinish: {
      ++state.num;
      auto best = state.advisor->IsBest(msg.worker);
      if (!best.ok()) return best.status();
      if (*best) out.push_back(MasterDirective::Put(msg.worker));
      break;
    }
  }
  UpdatePhase(state, conf, msg);
  return out;
}

absl::StatusOr<std::vector<MasterDirective>> CoStudyStep(StudyState& state,
                                                         const WireMessage& msg,
                                                         const StudyConf& conf) {
  if (auto s = CheckRunnable(state, msg); !s.ok()) return s;
  std::vector<MasterDirective> out;
  switch (msg.type) {
    case MsgType::kRequest:
      out.push_back(HandleRequest(state, msg, conf, /*warm_start=*/true));
      break;
    case MsgType::kReport: {
      if (auto s = state.advisor->Collect(msg.worker, *msg.p, *msg.trial); !s.ok()) {
        return s;
      }
      if (*msg.p - state.best_p > conf.delta) {
        out.push_back(MasterDirective::Put(msg.worker));
        state.best_p = *msg.p;
      } else {
        auto stop = state.advisor->EarlyStopping(msg.worker, conf.early_stop());
        if (!stop.ok()) return stop.status();
        if (*stop) out.push_back(MasterDirective::Stop(msg.worker));
      }
      break;
    }
    case MsgType::kFinish:
      ++state.num;
      break;
  }
  UpdatePhase(state, conf, msg);
  return out;
}

absl::StatusOr<StudyOutcome> RunStudy(const StudyConf& conf, StudyState state,
                                      MasterEndpoint& endpoint, StudyMode mode) {
  StudyOutcome outcome;
  while (state.phase != Phase::kDone) {
    auto msg = endpoint.Recv();
    if (!msg.ok()) return msg.status();
    const double now = endpoint.Now();
    if (conf.max_seconds && now >= *conf.max_seconds &&
        state.phase == Phase::kRunning) {
      state.phase = Phase::kDraining;
    }
    auto directives = mode == StudyMode::kStudy ? StudyStep(state, *msg, conf)
                                                : CoStudyStep(state, *msg, conf);
    if (!directives.ok()) return directives.status();
    for (const auto& d : *directives) {
      if (auto s = endpoint.Send(d); !s.ok()) return s;
    }
    outcome.log.push_back(AuditEntry{now, *std::move(msg), *std::move(directives)});
  }
  auto best = state.advisor->BestTrial();
  if (!best.ok()) return best.status();
  outcome.best = *std::move(best);
  outcome.elapsed = endpoint.Now();
  outcome.final_state = std::move(state);
  return outcome;
}

}  // namespace rafiki
