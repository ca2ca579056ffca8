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

// Sine-modulated request arrivals and the serving event loop.
//
// rate(t) = k sin(2 pi t / T) + b. The solved parameters put the peak at
// 1.1 ref and keep the rate above ref for 20% of every cycle:
//   s0 = sin(0.3 pi), k = 0.1 ref / (1 - s0), b = 1.1 ref - k
// Arrivals come on a fixed grid of step dt; each step draws one noise factor.
//
// The event loop consults the dispatcher whenever requests wait and a model
// is free: after arrivals land, after a batch completes and at wake-ups the
// dispatcher asks for. A dispatch naming a busy model is held until every
// selected model is free, and nothing else is dispatched meanwhile.

#ifndef RAFIKI_WORKLOAD_H_
#define RAFIKI_WORKLOAD_H_

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "rafiki/inference.h"
#include "rafiki/random.h"

namespace rafiki {

struct RateParams {
  double k = 0.0;
  double b = 0.0;
  double T = 1.0;
  double ref = 0.0;

  double Rate(double t) const;
  double peak() const { return k + b; }
};

RateParams SolveRateParams(double ref, double T);

// round(max(0, dt * rate(t) * (1 + phi))), phi ~ Normal(0, noise_sd).
int64_t Arrivals(const RateParams& params, double t, double dt, Rng& rng,
                 double noise_sd = 0.1);

struct WorkloadConf {
  // Zero selects the default: T = 500 tau, duration = T, window = tau,
  // dt = min(tau / 10, 0.01 T), queue capacity = 4 max(B) |M|.
  double period = 0.0;
  double duration = 0.0;
  double window = 0.0;
  double dt = 0.0;
  size_t queue_capacity = 0;
  double noise_sd = 0.1;
};

struct ServingScenario {
  std::vector<ModelProfile> models;
  EnsembleTable table;
  BatchingConf batching;
  RateParams rate;
  WorkloadConf workload;

  // Fills defaulted workload fields.
  WorkloadConf Resolved() const;
  absl::Status Validate() const;
};

struct WindowMetrics {
  double t0 = 0.0;
  double rate = 0.0;  // noise-free rate at the window midpoint
  int64_t arriving = 0;
  int64_t completed = 0;  // finished within tau
  int64_t overdue = 0;    // finished later than tau
  int64_t dropped = 0;
  double accuracy_sum = 0.0;  // a(M[v]) summed over finished requests
  double latency_sum = 0.0;
  int64_t queued_start = 0, queued_end = 0;
  int64_t inflight_start = 0, inflight_end = 0;

  int64_t finished() const { return completed + overdue; }
  double mean_accuracy() const;
  double mean_latency() const;
};

struct EpisodeMetrics {
  std::vector<WindowMetrics> windows;
  double duration = 0.0;
  double window = 0.0;
  int64_t dispatches = 0;

  int64_t total_arriving() const;
  int64_t total_overdue() const;
  int64_t total_finished() const;
  // Time average of window accuracy over windows that finished requests.
  double MeanAccuracy() const;
  double OverduePerSec() const;
  // Same, restricted to windows with mask[i].
  double MeanAccuracy(const std::vector<bool>& mask) const;
  double OverduePerSec(const std::vector<bool>& mask) const;
  // Windows whose noise-free rate lies in the lowest `fraction` of windows.
  std::vector<bool> LowRateWindows(double fraction = 0.25) const;

  // arriving = completed + overdue + dropped + dqueued + dinflight, and
  // consecutive windows chain.
  absl::Status CheckConservation() const;
  absl::Status WriteCsv(const std::string& path) const;
};

// Runs one episode from t = 0 to the configured duration. The dispatcher's
// BeginEpisode and EndEpisode bracket the run. Events go to `trace` as JSON
// lines when given.
absl::StatusOr<EpisodeMetrics> RunEpisode(Dispatcher& dispatcher,
                                          const ServingScenario& scenario,
                                          uint64_t seed, std::ostream* trace = nullptr);

}  // namespace rafiki

#endif  // RAFIKI_WORKLOAD_H_
