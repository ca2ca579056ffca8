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

// Synthetic learning-curve task standing in for ConvNet training.
//
// For an encoded trial x:
//   p_max(x) = p_cap * prod_i exp(-(x_i - mu_i)^2 / (2 s_i^2))
//   kappa(x) = kappa_min + (kappa_max - kappa_min) * mean_i(x_i)
//   p(e)     = p_eff * (1 - exp(-(e + warm_e0) / kappa)) + noise
//   p_eff    = p_max * (1 - lambda * deficit)
// The optimum mu is the encoding of one assignment sampled from the space, so
// p_cap is reachable. s_i is range_width for range coordinates and
// choice_width for one-hot coordinates.

#ifndef RAFIKI_TASK_H_
#define RAFIKI_TASK_H_

#include <cstdint>
#include <string>
#include <vector>

#include "rafiki/hyperspace.h"
#include "rafiki/param_store.h"

namespace rafiki {

struct TaskConfig {
  double p_cap = 0.95;
  double kappa_min = 4.0;
  double kappa_max = 16.0;
  double noise_sd = 0.005;
  double lambda = 0.5;
  double range_width = 0.6;
  double choice_width = 3.0;
  uint64_t seed = 0;
  double epoch_seconds = 1.0;
  int max_epochs = 10;
};

struct WarmCredit {
  double warm_e0 = 0.0;
  double deficit = 0.0;
};

class SyntheticTask {
 public:
  SyntheticTask(const HyperSpace& space, TaskConfig config);

  double PeakPerf(const Assignment& h) const;
  double Kappa(const Assignment& h) const;

  // Noise-free curve, unclamped.
  double CurveMean(const Assignment& h, double epoch, double warm_e0,
                   double deficit) const;
  // Noisy observation for (trial, epoch), clamped to [0, p_cap].
  double LearningCurve(const Assignment& h, int64_t trial_id, int epoch,
                       double warm_e0, double deficit) const;

  // Epoch credit for a donor of quality donor_perf and the quality deficit
  // against the best stored checkpoint. A donor covering only part of the
  // parameters earns that fraction of the epoch credit.
  WarmCredit WarmStartCredit(const Assignment& h, double donor_perf,
                             double running_best, double coverage = 1.0) const;

  const std::vector<double>& optimum() const { return mu_; }
  const Assignment& optimum_assignment() const { return mu_assignment_; }
  const TaskConfig& config() const { return config_; }
  const HyperSpace& space() const { return space_; }

 private:
  const HyperSpace& space_;
  TaskConfig config_;
  Assignment mu_assignment_;
  std::vector<double> mu_;
  std::vector<double> width_;
};

// Layer signature of the simulated ConvNet built from a trial:
//   conv(k,k,3,w), (n_conv - 1) x conv(k,k,w,w), dense(w,10)
// with k = "kernel" (default 3), w = "width" (default 32), n_conv = "n_conv"
// (default 1). Any further knob listed in `arch_knobs` adds a tag layer
// ("arch:<name>", {index}) so the signature tracks every architecture knob.
ShapeSig ConvNetSig(const HyperSpace& space, const Assignment& h,
                    const std::vector<std::string>& arch_knobs);

}  // namespace rafiki

#endif  // RAFIKI_TASK_H_
