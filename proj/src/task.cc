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

#include "rafiki/task.h"

#include <algorithm>
#include <cmath>

namespace rafiki {

SyntheticTask::SyntheticTask(const HyperSpace& space, TaskConfig config)
    : space_(space), config_(config) {
  Rng rng = MakeRng(config_.seed, "task-optimum");
  mu_assignment_ = space_.SampleAssignment(rng);
  mu_ = space_.Encode(mu_assignment_);
  for (const auto& knob : space_.knobs()) {
    if (const auto* choice = std::get_if<ChoiceDomain>(&knob.domain)) {
      width_.insert(width_.end(), choice->values.size(), config_.choice_width);
    } else {
      width_.push_back(config_.range_width);
    }
  }
}

double SyntheticTask::PeakPerf(const Assignment& h) const {
  const std::vector<double> x = space_.Encode(h);
  double log_p = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - mu_[i];
    log_p -= d * d / (2.0 * width_[i] * width_[i]);
  }
  return config_.p_cap * std::exp(log_p);
}

double SyntheticTask::Kappa(const Assignment& h) const {
  const std::vector<double> x = space_.Encode(h);
  double mean = 0.0;
  for (double v : x) mean += v;
  if (!x.empty()) mean /= static_cast<double>(x.size());
  return std::max(1.0, config_.kappa_min +
                           (config_.kappa_max - config_.kappa_min) * mean);
}

double SyntheticTask::CurveMean(const Assignment& h, double epoch,
                                double warm_e0, double deficit) const {
  const double p_eff =
      PeakPerf(h) * (1.0 - config_.lambda * std::max(0.0, deficit));
  return p_eff * (1.0 - std::exp(-(epoch + warm_e0) / Kappa(h)));
}

double SyntheticTask::LearningCurve(const Assignment& h, int64_t trial_id,
                                    int epoch, double warm_e0,
                                    double deficit) const {
  double p = CurveMean(h, epoch, warm_e0, deficit);
  if (config_.noise_sd > 0.0) {
    p += config_.noise_sd *
         CounterNormal(DeriveSeed(config_.seed, "task-noise"),
                       static_cast<uint64_t>(trial_id),
                       static_cast<uint64_t>(epoch));
  }
  return std::clamp(p, 0.0, config_.p_cap);
}

WarmCredit SyntheticTask::WarmStartCredit(const Assignment& h,
                                          double donor_perf,
                                          double running_best,
                                          double coverage) const {
  const double p_max = PeakPerf(h);
  const double kappa = Kappa(h);
  WarmCredit credit;
  if (p_max > 0.0 && donor_perf > 0.0) {
    const double ratio = std::min(donor_perf, 0.9 * p_max) / p_max;
    credit.warm_e0 = std::clamp(coverage, 0.0, 1.0) *
                     std::clamp(-kappa * std::log1p(-ratio), 0.0, 10.0 * kappa);
  }
  credit.deficit = std::max(0.0, running_best - donor_perf);
  return credit;
}

namespace {

int64_t IntKnob(const Assignment& h, const std::string& name, int64_t dflt) {
  auto it = h.find(name);
  if (it == h.end()) return dflt;
  if (auto v = KnobValueAsDouble(it->second)) return static_cast<int64_t>(*v);
  return dflt;
}

}  // namespace

ShapeSig ConvNetSig(const HyperSpace& space, const Assignment& h,
                    const std::vector<std::string>& arch_knobs) {
  const int64_t k = IntKnob(h, "kernel", 3);
  const int64_t w = IntKnob(h, "width", 32);
  const int64_t n_conv = std::max<int64_t>(1, IntKnob(h, "n_conv", 1));
  ShapeSig sig;
  sig.layers.push_back({"conv", {k, k, 3, w}});
  for (int64_t i = 1; i < n_conv; ++i) sig.layers.push_back({"conv", {k, k, w, w}});
  sig.layers.push_back({"dense", {w, 10}});
  for (const auto& name : arch_knobs) {
    if (name == "kernel" || name == "width" || name == "n_conv") continue;
    const KnobDef* knob = space.Find(name);
    auto it = h.find(name);
    if (knob == nullptr || it == h.end()) continue;
    int64_t index = 0;
    if (const auto* choice = std::get_if<ChoiceDomain>(&knob->domain)) {
      auto f = std::find(choice->values.begin(), choice->values.end(), it->second);
      index = f - choice->values.begin();
    } else if (auto v = KnobValueAsDouble(it->second)) {
      index = static_cast<int64_t>(std::llround(*v * 1e6));
    }
    sig.layers.push_back({"arch:" + name, {index}});
  }
  return sig;
}

}  // namespace rafiki
