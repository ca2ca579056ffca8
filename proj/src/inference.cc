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

#include "rafiki/inference.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "absl/strings/str_cat.h"

namespace rafiki {

RequestQueue::EnqueueResult RequestQueue::Enqueue(
    const std::vector<Request>& requests) {
  EnqueueResult r;
  for (const auto& req : requests) {
    if (Push(req)) {
      ++r.accepted;
    } else {
      ++r.dropped;
    }
  }
  return r;
}

bool RequestQueue::Push(const Request& r) {
  if (q_.size() >= capacity_) return false;
  q_.push_back(r);
  return true;
}

std::vector<Request> RequestQueue::PopFront(size_t n) {
  n = std::min(n, q_.size());
  std::vector<Request> out(q_.begin(), q_.begin() + n);
  q_.erase(q_.begin(), q_.begin() + n);
  return out;
}

absl::StatusOr<double> ModelProfile::Cost(int b) const {
  for (const auto& [bb, c] : latency) {
    if (bb == b) return c;
  }
  return absl::NotFoundError(absl::StrCat("model ", name, " has no latency for b=", b));
}

absl::Status ModelProfile::Validate() const {
  if (latency.empty()) {
    return absl::InvalidArgumentError(absl::StrCat("model ", name, ": empty latency table"));
  }
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
    return absl::InvalidArgumentError(absl::StrCat("model ", name, ": accuracy outside [0,1]"));
  }
  for (size_t i = 0; i < latency.size(); ++i) {
    const auto& [b, c] = latency[i];
    if (b < 1 || !(c > 0.0) || !std::isfinite(c)) {
      return absl::InvalidArgumentError(absl::StrCat("model ", name, ": bad row b=", b));
    }
    if (i > 0 && (b <= latency[i - 1].first || c <= latency[i - 1].second)) {
      return absl::InvalidArgumentError(
          absl::StrCat("model ", name, ": latency must strictly increase with b"));
    }
  }
  return absl::OkStatus();
}

std::vector<int> DefaultBatchSizes() { return {16, 32, 48, 64}; }

ModelProfile InterpolatedProfile(std::string name, std::string family,
                                 double accuracy, double memory_mb,
                                 const std::vector<int>& batch_sizes,
                                 double c_first, double c_last) {
  ModelProfile m;
  m.name = std::move(name);
  m.family = std::move(family);
  m.accuracy = accuracy;
  m.memory_mb = memory_mb;
  const double b0 = batch_sizes.front();
  const double b1 = batch_sizes.back();
  for (int b : batch_sizes) {
    const double f = b1 > b0 ? (b - b0) / (b1 - b0) : 0.0;
    m.latency.emplace_back(b, c_first + f * (c_last - c_first));
  }
  // Pin the endpoints so they are exact.
  m.latency.front().second = c_first;
  m.latency.back().second = c_last;
  return m;
}

ModelProfile SingleModelProfile() {
  return InterpolatedProfile("inception_v3", "inception_v3", 0.780, 104.0,
                             DefaultBatchSizes(), 0.07, 0.23);
}

std::vector<ModelProfile> ServingTrio() {
  const auto bs = DefaultBatchSizes();
  return {
      InterpolatedProfile("inception_v3", "inception_v3", 0.780, 104.0, bs, 0.07, 0.25),
      InterpolatedProfile("inception_v4", "inception_v4", 0.802, 171.0, bs, 0.10,
                          64.0 / 188.0),
      InterpolatedProfile("inception_resnet_v2", "inception_resnet_v2", 0.804, 214.0,
                          bs, 0.14, 0.50),
  };
}

double MaxThroughput(const ModelProfile& m, const std::vector<int>& batch_sizes) {
  double best = 0.0;
  for (int b : batch_sizes) best = std::max(best, b / *m.Cost(b));
  return best;
}

double MinThroughput(const ModelProfile& m, const std::vector<int>& batch_sizes) {
  double worst = INFINITY;
  for (int b : batch_sizes) worst = std::min(worst, b / *m.Cost(b));
  return worst;
}

double SyncThroughput(const std::vector<ModelProfile>& models,
                      const std::vector<int>& batch_sizes) {
  double best = 0.0;
  for (int b : batch_sizes) {
    double c = 0.0;
    for (const auto& m : models) c = std::max(c, *m.Cost(b));
    best = std::max(best, b / c);
  }
  return best;
}

double AsyncThroughput(const std::vector<ModelProfile>& models,
                       const std::vector<int>& batch_sizes) {
  double sum = 0.0;
  for (const auto& m : models) sum += MaxThroughput(m, batch_sizes);
  return sum;
}

GreedyDecision GreedyStep(const RequestQueue& q, const CostFn& cost, double now,
                          double tau, double delta,
                          const std::vector<int>& batch_sizes) {
  GreedyDecision d;
  if (q.empty() || batch_sizes.empty()) return d;
  const size_t len = q.size();
  if (len >= static_cast<size_t>(batch_sizes.back())) {
    d.batch = batch_sizes.back();
    return d;
  }
  int b = 0;
  for (int cand : batch_sizes) {
    if (static_cast<size_t>(cand) <= len) b = cand;
  }
  if (b == 0) return d;
  const double c = cost(b);
  const double w0 = now - q.front().arrival;
  if (c + w0 + delta >= tau) {
    d.batch = b;
  } else {
    d.ready_at = q.front().arrival + tau - delta - c;
  }
  return d;
}

GreedyDecision GreedyStep(const RequestQueue& q, const ModelProfile& model,
                          double now, double tau, double delta,
                          const std::vector<int>& batch_sizes) {
  return GreedyStep(
      q, [&model](int b) { return *model.Cost(b); }, now, tau, delta, batch_sizes);
}

int MaskSize(uint32_t mask) { return std::popcount(mask); }

uint32_t FullMask(size_t num_models) {
  return num_models >= 32 ? ~0u : (1u << num_models) - 1u;
}

absl::StatusOr<double> EnsembleCost(const std::vector<ModelProfile>& models,
                                    uint32_t mask, int b) {
  if (mask == 0) return absl::InvalidArgumentError("EmptySelection: mask is 0");
  if ((mask & ~FullMask(models.size())) != 0) {
    return absl::OutOfRangeError("mask selects models outside the list");
  }
  double c = 0.0;
  for (size_t m = 0; m < models.size(); ++m) {
    if (!(mask & (1u << m))) continue;
    auto cm = models[m].Cost(b);
    if (!cm.ok()) return cm.status();
    c = std::max(c, *cm);
  }
  return c;
}

size_t EnsembleTable::num_models() const {
  return accuracy.empty() ? 0 : static_cast<size_t>(std::countr_zero(accuracy.size()));
}

absl::StatusOr<double> EnsembleTable::At(uint32_t mask) const {
  if (mask == 0) return absl::InvalidArgumentError("EmptySelection: mask is 0");
  if (mask >= accuracy.size()) return absl::OutOfRangeError("mask not covered by table");
  return accuracy[mask];
}

absl::StatusOr<double> EnsembleAccuracy(const EnsembleTable& table, uint32_t mask) {
  return table.At(mask);
}

VoteSample DrawVotes(const std::vector<ModelProfile>& models,
                     const VoteSimConfig& conf, Rng& rng) {
  VoteSample v;
  v.num_examples = conf.num_examples;
  v.num_models = models.size();
  v.labels.resize(static_cast<size_t>(conf.num_examples) * models.size());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> wrong(1, std::max(1, conf.num_labels - 1));
  for (int64_t e = 0; e < conf.num_examples; ++e) {
    const int shared = wrong(rng);
    for (size_t m = 0; m < models.size(); ++m) {
      uint8_t label = 0;
      if (unit(rng) >= models[m].accuracy) {
        label = static_cast<uint8_t>(unit(rng) < conf.rho ? shared : wrong(rng));
      }
      v.labels[e * models.size() + m] = label;
    }
  }
  return v;
}

uint8_t VoteLabel(const VoteSample& votes, int64_t example, uint32_t mask,
                  const std::vector<size_t>& by_accuracy) {
  int counts[256] = {0};
  int top = 0;
  for (size_t m = 0; m < votes.num_models; ++m) {
    if (!(mask & (1u << m))) continue;
    top = std::max(top, ++counts[votes.at(example, m)]);
  }
  for (size_t m : by_accuracy) {
    if (!(mask & (1u << m))) continue;
    const uint8_t label = votes.at(example, m);
    if (counts[label] == top) return label;
  }
  return 0;
}

namespace {

std::vector<size_t> ByAccuracy(const std::vector<ModelProfile>& models) {
  std::vector<size_t> order(models.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return models[a].accuracy > models[b].accuracy;
  });
  return order;
}

}  // namespace

EnsembleTable TableFromVotes(const std::vector<ModelProfile>& models,
                             const VoteSample& votes) {
  const std::vector<size_t> order = ByAccuracy(models);
  EnsembleTable table;
  table.accuracy.assign(size_t{1} << models.size(), 0.0);
  for (uint32_t mask = 1; mask < table.accuracy.size(); ++mask) {
    int64_t correct = 0;
    for (int64_t e = 0; e < votes.num_examples; ++e) {
      if (VoteLabel(votes, e, mask, order) == 0) ++correct;
    }
    table.accuracy[mask] =
        votes.num_examples > 0 ? static_cast<double>(correct) / votes.num_examples : 0.0;
  }
  return table;
}

EnsembleTable BuildEnsembleTable(const std::vector<ModelProfile>& models,
                                 const VoteSimConfig& conf, Rng& rng) {
  return TableFromVotes(models, DrawVotes(models, conf, rng));
}

EnsembleTable BestMemberTable(const std::vector<ModelProfile>& models) {
  EnsembleTable table;
  table.accuracy.assign(size_t{1} << models.size(), 0.0);
  for (uint32_t mask = 1; mask < table.accuracy.size(); ++mask) {
    for (size_t m = 0; m < models.size(); ++m) {
      if (mask & (1u << m)) {
        table.accuracy[mask] = std::max(table.accuracy[mask], models[m].accuracy);
      }
    }
  }
  return table;
}

absl::StatusOr<double> ExceedTime(const std::vector<RequestStat>& stats, double tau) {
  if (stats.empty()) return absl::InvalidArgumentError("EmptyStats: no requests");
  double sum = 0.0;
  for (const auto& s : stats) sum += std::max(0.0, s.latency - tau);
  return sum / static_cast<double>(stats.size());
}

std::vector<ModelProfile> SelectModels(const std::vector<ModelProfile>& registry,
                                       std::string_view task, int k, double eps) {
  std::vector<const ModelProfile*> pool;
  for (const auto& m : registry) {
    if (m.task == task) pool.push_back(&m);
  }
  std::stable_sort(pool.begin(), pool.end(), [](const ModelProfile* a, const ModelProfile* b) {
    return a->accuracy > b->accuracy;
  });
  std::vector<ModelProfile> out;
  if (pool.empty() || k < 1) return out;
  const double best = pool.front()->accuracy;
  for (const ModelProfile* m : pool) {
    if (static_cast<int>(out.size()) >= k) break;
    if (best - m->accuracy > eps) break;
    const bool seen = std::any_of(out.begin(), out.end(), [&](const ModelProfile& o) {
      return o.family == m->family;
    });
    if (!seen) out.push_back(*m);
  }
  return out;
}

GreedyDispatcher::GreedyDispatcher(std::vector<ModelProfile> models, BatchingConf conf)
    : models_(std::move(models)), conf_(std::move(conf)) {}

absl::StatusOr<DispatchDecision> GreedyDispatcher::Decide(const ServingView& view) {
  DispatchDecision out;
  if (!view.free(0)) return out;
  GreedyDecision g = GreedyStep(*view.queue, models_[0], view.now, conf_.tau,
                                conf_.delta, conf_.batch_sizes);
  if (g.wait()) {
    out.wake_at = g.ready_at;
  } else {
    out.dispatches.push_back({1u, g.batch});
  }
  return out;
}

SyncDispatcher::SyncDispatcher(std::vector<ModelProfile> models, BatchingConf conf)
    : models_(std::move(models)), conf_(std::move(conf)) {}

absl::StatusOr<DispatchDecision> SyncDispatcher::Decide(const ServingView& view) {
  DispatchDecision out;
  for (size_t m = 0; m < models_.size(); ++m) {
    if (!view.free(m)) return out;
  }
  const uint32_t all = FullMask(models_.size());
  GreedyDecision g = GreedyStep(
      *view.queue, [&](int b) { return *EnsembleCost(models_, all, b); }, view.now,
      conf_.tau, conf_.delta, conf_.batch_sizes);
  if (g.wait()) {
    out.wake_at = g.ready_at;
  } else {
    out.dispatches.push_back({all, g.batch});
  }
  return out;
}

AsyncDispatcher::AsyncDispatcher(std::vector<ModelProfile> models, BatchingConf conf)
    : models_(std::move(models)), conf_(std::move(conf)) {}

absl::StatusOr<DispatchDecision> AsyncDispatcher::Decide(const ServingView& view) {
  DispatchDecision out;
  const size_t n = models_.size();
  for (size_t i = 0; i < n; ++i) {
    const size_t m = (next_ + i) % n;
    if (!view.free(m)) continue;
    GreedyDecision g = GreedyStep(*view.queue, models_[m], view.now, conf_.tau,
                                  conf_.delta, conf_.batch_sizes);
    if (!g.wait()) {
      out.dispatches.push_back({1u << m, g.batch});
      out.wake_at.reset();
      next_ = (m + 1) % n;
      return out;
    }
    if (g.ready_at && (!out.wake_at || *g.ready_at < *out.wake_at)) {
      out.wake_at = g.ready_at;
    }
  }
  return out;
}

}  // namespace rafiki
