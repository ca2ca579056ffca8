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

// Inference serving primitives: request queue, model profiles, greedy
// batching, ensemble cost and accuracy, and the dispatcher interface used by
// the serving simulator.
//
// Models in a list are addressed by bit i of a selection mask; mask 0 is not
// a valid selection.

#ifndef RAFIKI_INFERENCE_H_
#define RAFIKI_INFERENCE_H_

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "rafiki/random.h"

namespace rafiki {

struct Request {
  int64_t id = 0;
  double arrival = 0.0;
  uint64_t tag = 0;
};

class RequestQueue {
 public:
  struct EnqueueResult {
    int64_t accepted = 0;
    int64_t dropped = 0;
  };

  // capacity >= 1.
  explicit RequestQueue(size_t capacity) : capacity_(capacity) {}

  EnqueueResult Enqueue(const std::vector<Request>& requests);
  bool Push(const Request& r);
  std::vector<Request> PopFront(size_t n);

  size_t size() const { return q_.size(); }
  bool empty() const { return q_.empty(); }
  size_t capacity() const { return capacity_; }
  const Request& front() const { return q_.front(); }
  const Request& at(size_t i) const { return q_[i]; }

 private:
  size_t capacity_;
  std::deque<Request> q_;
};

struct ModelProfile {
  std::string name;
  std::string family;
  std::string task = "imagenet";
  double accuracy = 0.0;
  double memory_mb = 0.0;
  std::vector<std::pair<int, double>> latency;  // (b, seconds), ascending b

  // NotFound if b has no row.
  absl::StatusOr<double> Cost(int b) const;
  // Fails unless rows are ascending in b with strictly increasing cost and
  // accuracy is in [0, 1].
  absl::Status Validate() const;
};

std::vector<int> DefaultBatchSizes();

// Latency rows for `batch_sizes` interpolated linearly between the first and
// last batch size.
ModelProfile InterpolatedProfile(std::string name, std::string family,
                                 double accuracy, double memory_mb,
                                 const std::vector<int>& batch_sizes,
                                 double c_first, double c_last);

// inception_v3 with c(16) = 0.07 s, c(64) = 0.23 s.
ModelProfile SingleModelProfile();
// inception_v3, inception_v4, inception_resnet_v2 with peak throughputs
// 256, 188 and 128 req/s at b = 64.
std::vector<ModelProfile> ServingTrio();

// max_b b / c(b) and min_b b / c(b).
double MaxThroughput(const ModelProfile& m, const std::vector<int>& batch_sizes);
double MinThroughput(const ModelProfile& m, const std::vector<int>& batch_sizes);
// All models serve every batch: max_b b / max_m c(m, b).
double SyncThroughput(const std::vector<ModelProfile>& models,
                      const std::vector<int>& batch_sizes);
// Each model serves its own batches: sum_m max_b b / c(m, b).
double AsyncThroughput(const std::vector<ModelProfile>& models,
                       const std::vector<int>& batch_sizes);

using CostFn = std::function<double(int)>;

struct GreedyDecision {
  int batch = 0;  // 0 means wait
  // When waiting with a candidate batch size, the time the guard turns true.
  std::optional<double> ready_at;

  bool wait() const { return batch == 0; }
};

// Greedy step: full batch of max(B) when the queue holds one; otherwise the
// largest b <= len(q) once c(b) + w(q0) + delta >= tau; otherwise wait.
// `batch_sizes` ascending. The caller dequeues.
GreedyDecision GreedyStep(const RequestQueue& q, const CostFn& cost, double now,
                          double tau, double delta,
                          const std::vector<int>& batch_sizes);
GreedyDecision GreedyStep(const RequestQueue& q, const ModelProfile& model,
                          double now, double tau, double delta,
                          const std::vector<int>& batch_sizes);

int MaskSize(uint32_t mask);
uint32_t FullMask(size_t num_models);

// Straggler cost: max over selected models of c(m, b).
absl::StatusOr<double> EnsembleCost(const std::vector<ModelProfile>& models,
                                    uint32_t mask, int b);

struct EnsembleTable {
  std::vector<double> accuracy;  // indexed by mask; entry 0 unused

  size_t num_models() const;
  absl::StatusOr<double> At(uint32_t mask) const;
};

absl::StatusOr<double> EnsembleAccuracy(const EnsembleTable& table, uint32_t mask);

struct VoteSimConfig {
  int64_t num_examples = 100000;
  int num_labels = 10;
  double rho = 0.3;
};

// Predicted labels, row-major [example][model]. Label 0 is the truth.
struct VoteSample {
  int64_t num_examples = 0;
  size_t num_models = 0;
  std::vector<uint8_t> labels;

  uint8_t at(int64_t e, size_t m) const { return labels[e * num_models + m]; }
};

// Model m is right with probability a(m). A wrong model copies the example's
// shared wrong label with probability rho, otherwise draws its own.
VoteSample DrawVotes(const std::vector<ModelProfile>& models,
                     const VoteSimConfig& conf, Rng& rng);

// Majority vote of the selected members. A tie goes to the label of the
// most accurate member voting for a tied label.
uint8_t VoteLabel(const VoteSample& votes, int64_t example, uint32_t mask,
                  const std::vector<size_t>& by_accuracy);

EnsembleTable TableFromVotes(const std::vector<ModelProfile>& models,
                             const VoteSample& votes);
EnsembleTable BuildEnsembleTable(const std::vector<ModelProfile>& models,
                                 const VoteSimConfig& conf, Rng& rng);
// Each mask scores the best selected member's accuracy.
EnsembleTable BestMemberTable(const std::vector<ModelProfile>& models);

struct RequestStat {
  double wait = 0.0;
  double latency = 0.0;  // wait + inference
};

// Mean of max(0, l(s) - tau). EmptyStats on no requests.
absl::StatusOr<double> ExceedTime(const std::vector<RequestStat>& stats, double tau);

// Best-accuracy model for `task` first, then models within eps of it whose
// family differs from every admitted one, best first, up to k.
std::vector<ModelProfile> SelectModels(const std::vector<ModelProfile>& registry,
                                       std::string_view task, int k, double eps);

// What a dispatcher sees when consulted.
struct ServingView {
  double now = 0.0;
  const RequestQueue* queue = nullptr;
  const std::vector<double>* busy_until = nullptr;  // per model

  bool free(size_t m) const { return (*busy_until)[m] <= now; }
};

// One batch: oldest min(b, len(q)) requests served by every model in mask.
struct Dispatch {
  uint32_t mask = 0;
  int b = 0;
};

struct DispatchDecision {
  std::vector<Dispatch> dispatches;
  std::optional<double> wake_at;
};

// Execution report for a dispatch, issued when its batch starts.
struct Executed {
  Dispatch dispatch;
  double start = 0.0;
  double cost = 0.0;
  int count = 0;
  int overdue = 0;  // requests that will finish later than tau
  double accuracy = 0.0;
};

class Dispatcher {
 public:
  virtual ~Dispatcher() = default;
  virtual std::string_view name() const = 0;
  virtual void BeginEpisode() {}
  virtual absl::StatusOr<DispatchDecision> Decide(const ServingView& view) = 0;
  virtual void OnExecuted(const Executed&) {}
  virtual absl::Status EndEpisode() { return absl::OkStatus(); }
};

struct BatchingConf {
  std::vector<int> batch_sizes = DefaultBatchSizes();
  double tau = 0.56;
  double delta = 0.056;
};

// Greedy batching on a single model.
class GreedyDispatcher : public Dispatcher {
 public:
  GreedyDispatcher(std::vector<ModelProfile> models, BatchingConf conf);
  std::string_view name() const override { return "greedy"; }
  absl::StatusOr<DispatchDecision> Decide(const ServingView& view) override;

 private:
  std::vector<ModelProfile> models_;
  BatchingConf conf_;
};

// Every batch goes to all models once all are free; greedy batching on the
// straggler cost.
class SyncDispatcher : public Dispatcher {
 public:
  SyncDispatcher(std::vector<ModelProfile> models, BatchingConf conf);
  std::string_view name() const override { return "sync"; }
  absl::StatusOr<DispatchDecision> Decide(const ServingView& view) override;

 private:
  std::vector<ModelProfile> models_;
  BatchingConf conf_;
};

// One model per batch in round-robin order; greedy batching per model.
class AsyncDispatcher : public Dispatcher {
 public:
  AsyncDispatcher(std::vector<ModelProfile> models, BatchingConf conf);
  std::string_view name() const override { return "async"; }
  void BeginEpisode() override { next_ = 0; }
  absl::StatusOr<DispatchDecision> Decide(const ServingView& view) override;

 private:
  std::vector<ModelProfile> models_;
  BatchingConf conf_;
  size_t next_ = 0;
};

}  // namespace rafiki

#endif  // RAFIKI_INFERENCE_H_
