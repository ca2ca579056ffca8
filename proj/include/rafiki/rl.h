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

// Actor-critic batch scheduler.
//
// State: waits of the oldest L queued requests (zero padded), remaining busy
// time per model, and the flattened cost table c(m, b). Single-model agents
// see only the waits. Features are divided by tau.
//
// Actions pair a nonzero model mask v with a batch size b:
//   index = (v - 1) * |B| + position of b in B
//
// Policy and value are one-hidden-layer tanh perceptrons. After each episode
// the returns G_t are formed, A_t = G_t - V(s_t), the policy ascends
// mean_t A_t grad log pi(a_t | s_t) and the value descends
// mean_t (V(s_t) - G_t)^2, each with one momentum SGD step. Advantages may be
// standardized per episode and gradients clipped by norm.

#ifndef RAFIKI_RL_H_
#define RAFIKI_RL_H_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "rafiki/inference.h"
#include "rafiki/random.h"

namespace rafiki {

struct SchedulerState {
  std::vector<double> queue_waits;
  std::vector<double> model_busy;
  std::vector<double> cost_table;

  size_t dim() const { return queue_waits.size() + model_busy.size() + cost_table.size(); }
  Eigen::VectorXd Features(double scale) const;
};

// With single_model the busy and cost features are dropped.
SchedulerState Featurize(const RequestQueue& queue,
                         const std::vector<double>& busy_until, double now,
                         const std::vector<ModelProfile>& models,
                         const std::vector<int>& batch_sizes, int L,
                         bool single_model = false);

struct Action {
  uint32_t mask = 0;
  int b = 0;

  bool operator==(const Action&) const = default;
};

int NumActions(size_t num_models, size_t num_batch_sizes);
absl::StatusOr<Action> ActionDecode(int index, size_t num_models,
                                    const std::vector<int>& batch_sizes);
absl::StatusOr<int> ActionEncode(const Action& action, size_t num_models,
                                 const std::vector<int>& batch_sizes);

// Exactly a(M[v]) * (b - beta * overdue).
absl::StatusOr<double> Reward(uint32_t mask, int b, int overdue, double beta,
                              const EnsembleTable& table);

struct TrajectoryStep {
  Eigen::VectorXd state;
  int action = 0;
  double reward = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  double gamma = 0.9;
};

// sum_{k >= t} gamma^(k - t) R_k.
double EpisodeReturn(const Trajectory& traj, size_t t);
std::vector<double> EpisodeReturns(const Trajectory& traj);

// input -> tanh(H) -> output.
class Mlp {
 public:
  struct Cache {
    Eigen::VectorXd x;
    Eigen::VectorXd h;
  };

  Mlp() = default;
  Mlp(int in, int hidden, int out);

  void InitRandom(Rng& rng);
  Eigen::VectorXd Forward(const Eigen::VectorXd& x, Cache* cache = nullptr) const;
  // Adds d(loss)/d(params) given d(loss)/d(output) into `grad`.
  void Backward(const Cache& cache, const Eigen::VectorXd& dout,
                Eigen::VectorXd& grad) const;

  int in() const { return static_cast<int>(w1_.cols()); }
  int hidden() const { return static_cast<int>(w1_.rows()); }
  int out() const { return static_cast<int>(w2_.rows()); }
  int64_t num_params() const;

  // Flat order: W1 row-major, b1, W2 row-major, b2.
  Eigen::VectorXd Params() const;
  void SetParams(const Eigen::VectorXd& p);

 private:
  Eigen::MatrixXd w1_, w2_;
  Eigen::VectorXd b1_, b2_;
};

// Stable softmax.
Eigen::VectorXd Softmax(const Eigen::VectorXd& logits);

// log pi(a | s) and its gradient with respect to the policy parameters.
double PolicyLogProb(const Mlp& policy, const Eigen::VectorXd& s, int a);
Eigen::VectorXd PolicyLogProbGrad(const Mlp& policy, const Eigen::VectorXd& s, int a);

struct RlConfig {
  int queue_len = 64;
  int hidden = 64;
  double gamma = 0.9;
  double lr_policy = 0.1;
  double lr_value = 0.1;
  double momentum = 0.9;
  double beta = 1.0;
  // Multiplies rewards before returns are formed, 1 / max(B) by default.
  double return_scale = 1.0 / 64.0;
  // Standardize advantages over the episode before the policy step.
  bool normalize_advantage = true;
  // Rescale each gradient to at most this L2 norm; 0 disables.
  double max_grad_norm = 1.0;
  int train_episodes = 200;
};

enum class ActMode { kSample, kGreedy };

class ActorCritic {
 public:
  ActorCritic(int state_dim, int num_actions, const RlConfig& conf, uint64_t seed);

  Eigen::VectorXd Policy(const Eigen::VectorXd& s) const;
  double Value(const Eigen::VectorXd& s) const;
  int Act(const Eigen::VectorXd& s, Rng& rng, ActMode mode) const;

  // One update from a finished episode. NonFinite leaves both networks
  // untouched.
  absl::Status Update(const Trajectory& traj);

  const Mlp& policy() const { return policy_; }
  const Mlp& value() const { return value_; }
  Mlp& mutable_policy() { return policy_; }
  Mlp& mutable_value() { return value_; }

  // Flat binary record: magic, dims header, then float64 row-major weights.
  absl::Status Save(const std::string& path) const;
  absl::Status Load(const std::string& path);

 private:
  RlConfig conf_;
  Mlp policy_;
  Mlp value_;
  Eigen::VectorXd vel_policy_;
  Eigen::VectorXd vel_value_;
};

// Scheduler driven by an ActorCritic. A sampled action whose models are busy
// is held by the simulator until they free up. In training mode the episode
// is learned from at EndEpisode; a NonFinite update is skipped and counted.
class RlDispatcher : public Dispatcher {
 public:
  RlDispatcher(ActorCritic* agent, std::vector<ModelProfile> models,
               EnsembleTable table, std::vector<int> batch_sizes, double tau,
               const RlConfig& conf, uint64_t seed, bool train);

  std::string_view name() const override { return "rl"; }
  void BeginEpisode() override;
  absl::StatusOr<DispatchDecision> Decide(const ServingView& view) override;
  void OnExecuted(const Executed& e) override;
  absl::Status EndEpisode() override;

  void set_train(bool train) { train_ = train; }
  double episode_reward() const { return episode_reward_; }
  int episodes() const { return episodes_; }
  int skipped_updates() const { return skipped_updates_; }

 private:
  ActorCritic* agent_;
  std::vector<ModelProfile> models_;
  EnsembleTable table_;
  std::vector<int> batch_sizes_;
  double tau_;
  RlConfig conf_;
  Rng rng_;
  bool train_;
  Trajectory traj_;
  double episode_reward_ = 0.0;
  int episodes_ = 0;
  int skipped_updates_ = 0;
};

}  // namespace rafiki

#endif  // RAFIKI_RL_H_
