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

#include "rafiki/rl.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "absl/strings/str_cat.h"

namespace rafiki {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using RowMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstRowMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

VectorXd SchedulerState::Features(double scale) const {
  VectorXd f(dim());
  Eigen::Index i = 0;
  for (const auto* part : {&queue_waits, &model_busy, &cost_table}) {
    for (double v : *part) f[i++] = v / scale;
  }
  return f;
}

SchedulerState Featurize(const RequestQueue& queue,
                         const std::vector<double>& busy_until, double now,
                         const std::vector<ModelProfile>& models,
                         const std::vector<int>& batch_sizes, int L,
                         bool single_model) {
  SchedulerState s;
  s.queue_waits.assign(static_cast<size_t>(L), 0.0);
  const size_t n = std::min(queue.size(), static_cast<size_t>(L));
  for (size_t i = 0; i < n; ++i) s.queue_waits[i] = now - queue.at(i).arrival;
  if (single_model) return s;
  for (double t : busy_until) s.model_busy.push_back(std::max(0.0, t - now));
  for (const auto& m : models) {
    for (int b : batch_sizes) s.cost_table.push_back(m.Cost(b).value_or(0.0));
  }
  return s;
}

int NumActions(size_t num_models, size_t num_batch_sizes) {
  return static_cast<int>(((size_t{1} << num_models) - 1) * num_batch_sizes);
}

absl::StatusOr<Action> ActionDecode(int index, size_t num_models,
                                    const std::vector<int>& batch_sizes) {
  if (index < 0 || index >= NumActions(num_models, batch_sizes.size())) {
    return absl::OutOfRangeError(absl::StrCat("action index ", index, " out of range"));
  }
  const int nb = static_cast<int>(batch_sizes.size());
  return Action{static_cast<uint32_t>(index / nb + 1), batch_sizes[index % nb]};
}

absl::StatusOr<int> ActionEncode(const Action& action, size_t num_models,
                                 const std::vector<int>& batch_sizes) {
  if (action.mask == 0 || action.mask > FullMask(num_models)) {
    return absl::OutOfRangeError("action mask out of range");
  }
  auto it = std::find(batch_sizes.begin(), batch_sizes.end(), action.b);
  if (it == batch_sizes.end()) {
    return absl::OutOfRangeError(absl::StrCat("batch size ", action.b, " not in B"));
  }
  return static_cast<int>((action.mask - 1) * batch_sizes.size() +
                          (it - batch_sizes.begin()));
}

absl::StatusOr<double> Reward(uint32_t mask, int b, int overdue, double beta,
                              const EnsembleTable& table) {
  auto a = table.At(mask);
  if (!a.ok()) return a.status();
  return *a * (b - beta * overdue);
}

double EpisodeReturn(const Trajectory& traj, size_t t) {
  double g = 0.0;
  double w = 1.0;
  for (size_t k = t; k < traj.steps.size(); ++k) {
    g += w * traj.steps[k].reward;
    w *= traj.gamma;
  }
  return g;
}

std::vector<double> EpisodeReturns(const Trajectory& traj) {
  std::vector<double> g(traj.steps.size());
  double acc = 0.0;
  for (size_t k = traj.steps.size(); k-- > 0;) {
    acc = traj.steps[k].reward + traj.gamma * acc;
    g[k] = acc;
  }
  return g;
}

Mlp::Mlp(int in, int hidden, int out)
    : w1_(MatrixXd::Zero(hidden, in)),
      w2_(MatrixXd::Zero(out, hidden)),
      b1_(VectorXd::Zero(hidden)),
      b2_(VectorXd::Zero(out)) {}

void Mlp::InitRandom(Rng& rng) {
  auto fill = [&rng](MatrixXd& w) {
    const double s = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> u(-s, s);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = u(rng);
    }
  };
  fill(w1_);
  fill(w2_);
  b1_.setZero();
  b2_.setZero();
}

VectorXd Mlp::Forward(const VectorXd& x, Cache* cache) const {
  VectorXd h = (w1_ * x + b1_).array().tanh().matrix();
  VectorXd out = w2_ * h + b2_;
  if (cache != nullptr) {
    cache->x = x;
    cache->h = std::move(h);
  }
  return out;
}

int64_t Mlp::num_params() const {
  return w1_.size() + b1_.size() + w2_.size() + b2_.size();
}

void Mlp::Backward(const Cache& cache, const VectorXd& dout, VectorXd& grad) const {
  const Eigen::Index H = w1_.rows(), I = w1_.cols(), O = w2_.rows();
  double* g = grad.data();
  const VectorXd dz =
      ((w2_.transpose() * dout).array() * (1.0 - cache.h.array().square())).matrix();
  RowMap(g, H, I).noalias() += dz * cache.x.transpose();
  g += H * I;
  Eigen::Map<VectorXd>(g, H) += dz;
  g += H;
  RowMap(g, O, H).noalias() += dout * cache.h.transpose();
  g += O * H;
  Eigen::Map<VectorXd>(g, O) += dout;
}

VectorXd Mlp::Params() const {
  VectorXd p(num_params());
  double* g = p.data();
  RowMap(g, w1_.rows(), w1_.cols()) = w1_;
  g += w1_.size();
  Eigen::Map<VectorXd>(g, b1_.size()) = b1_;
  g += b1_.size();
  RowMap(g, w2_.rows(), w2_.cols()) = w2_;
  g += w2_.size();
  Eigen::Map<VectorXd>(g, b2_.size()) = b2_;
  return p;
}

void Mlp::SetParams(const VectorXd& p) {
  const double* g = p.data();
  w1_ = ConstRowMap(g, w1_.rows(), w1_.cols());
  g += w1_.size();
  b1_ = Eigen::Map<const VectorXd>(g, b1_.size());
  g += b1_.size();
  w2_ = ConstRowMap(g, w2_.rows(), w2_.cols());
  g += w2_.size();
  b2_ = Eigen::Map<const VectorXd>(g, b2_.size());
}

VectorXd Softmax(const VectorXd& logits) {
  VectorXd e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

double PolicyLogProb(const Mlp& policy, const VectorXd& s, int a) {
  const VectorXd z = policy.Forward(s);
  const double m = z.maxCoeff();
  return z[a] - m - std::log((z.array() - m).exp().sum());
}

VectorXd PolicyLogProbGrad(const Mlp& policy, const VectorXd& s, int a) {
  Mlp::Cache cache;
  const VectorXd p = Softmax(policy.Forward(s, &cache));
  VectorXd dout = -p;
  dout[a] += 1.0;
  VectorXd grad = VectorXd::Zero(policy.num_params());
  policy.Backward(cache, dout, grad);
  return grad;
}

ActorCritic::ActorCritic(int state_dim, int num_actions, const RlConfig& conf,
                         uint64_t seed)
    : conf_(conf),
      policy_(state_dim, conf.hidden, num_actions),
      value_(state_dim, conf.hidden, 1) {
  Rng rng = MakeRng(seed, "rl-init");
  policy_.InitRandom(rng);
  value_.InitRandom(rng);
  vel_policy_ = VectorXd::Zero(policy_.num_params());
  vel_value_ = VectorXd::Zero(value_.num_params());
}

VectorXd ActorCritic::Policy(const VectorXd& s) const {
  return Softmax(policy_.Forward(s));
}

double ActorCritic::Value(const VectorXd& s) const { return value_.Forward(s)[0]; }

int ActorCritic::Act(const VectorXd& s, Rng& rng, ActMode mode) const {
  const VectorXd p = Policy(s);
  if (mode == ActMode::kGreedy) {
    Eigen::Index best = 0;
    p.maxCoeff(&best);
    return static_cast<int>(best);
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    r -= p[i];
    if (r < 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(p.size() - 1);
}

absl::Status ActorCritic::Update(const Trajectory& traj) {
  if (traj.steps.empty()) return absl::InvalidArgumentError("empty trajectory");
  const size_t len = traj.steps.size();
  const double n = static_cast<double>(len);
  std::vector<double> g = EpisodeReturns(traj);
  for (double& x : g) x *= conf_.return_scale;
  std::vector<Mlp::Cache> vcache(len);
  std::vector<double> adv(len);
  for (size_t t = 0; t < len; ++t) {
    adv[t] = g[t] - value_.Forward(traj.steps[t].state, &vcache[t])[0];
  }
  VectorXd gv = VectorXd::Zero(value_.num_params());
  for (size_t t = 0; t < len; ++t) {
    // Value: descend (V - G)^2.
    VectorXd dv(1);
    dv[0] = -2.0 * adv[t] / n;
    value_.Backward(vcache[t], dv, gv);
  }
  if (conf_.normalize_advantage && len > 1) {
    double mean = 0.0, var = 0.0;
    for (double a : adv) mean += a;
    mean /= n;
    for (double a : adv) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / n);
    for (double& a : adv) a = sd > 1e-12 ? (a - mean) / sd : 0.0;
  }
  VectorXd gp = VectorXd::Zero(policy_.num_params());
  Mlp::Cache pc;
  for (size_t t = 0; t < len; ++t) {
    if (adv[t] == 0.0) continue;
    const auto& step = traj.steps[t];
    // Policy: ascend A * log pi(a|s); accumulate the negated direction.
    VectorXd dz = Softmax(policy_.Forward(step.state, &pc));
    dz[step.action] -= 1.0;
    dz *= adv[t] / n;
    policy_.Backward(pc, dz, gp);
  }
  if (conf_.max_grad_norm > 0.0) {
    for (VectorXd* grad : {&gp, &gv}) {
      const double norm = grad->norm();
      if (norm > conf_.max_grad_norm) *grad *= conf_.max_grad_norm / norm;
    }
  }
  if (!gp.allFinite() || !gv.allFinite()) {
    return absl::InternalError("NonFinite: gradient overflow, update skipped");
  }
  VectorXd vp = conf_.momentum * vel_policy_ + gp;
  VectorXd vv = conf_.momentum * vel_value_ + gv;
  VectorXd np = policy_.Params() - conf_.lr_policy * vp;
  VectorXd nv = value_.Params() - conf_.lr_value * vv;
  if (!np.allFinite() || !nv.allFinite()) {
    return absl::InternalError("NonFinite: parameters overflow, update skipped");
  }
  vel_policy_ = std::move(vp);
  vel_value_ = std::move(vv);
  policy_.SetParams(np);
  value_.SetParams(nv);
  return absl::OkStatus();
}

namespace {

constexpr char kMagic[8] = {'R', 'F', 'K', 'A', 'C', '0', '0', '1'};

void WriteNet(std::ofstream& out, const Mlp& net) {
  const uint32_t dims[3] = {static_cast<uint32_t>(net.in()),
                            static_cast<uint32_t>(net.hidden()),
                            static_cast<uint32_t>(net.out())};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  const VectorXd p = net.Params();
  out.write(reinterpret_cast<const char*>(p.data()),
            static_cast<std::streamsize>(p.size() * sizeof(double)));
}

absl::Status ReadNet(std::ifstream& in, Mlp& net) {
  uint32_t dims[3];
  if (!in.read(reinterpret_cast<char*>(dims), sizeof(dims))) {
    return absl::DataLossError("truncated parameter header");
  }
  if (dims[0] != static_cast<uint32_t>(net.in()) ||
      dims[1] != static_cast<uint32_t>(net.hidden()) ||
      dims[2] != static_cast<uint32_t>(net.out())) {
    return absl::InvalidArgumentError(absl::StrCat(
        "parameter shape ", dims[0], "x", dims[1], "x", dims[2], " does not match"));
  }
  VectorXd p(net.num_params());
  if (!in.read(reinterpret_cast<char*>(p.data()),
               static_cast<std::streamsize>(p.size() * sizeof(double)))) {
    return absl::DataLossError("truncated parameter record");
  }
  if (!p.allFinite()) return absl::DataLossError("NonFinite: stored parameters");
  net.SetParams(p);
  return absl::OkStatus();
}

}  // namespace

absl::Status ActorCritic::Save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) return absl::InternalError(absl::StrCat("cannot write ", path));
  out.write(kMagic, sizeof(kMagic));
  WriteNet(out, policy_);
  WriteNet(out, value_);
  return out ? absl::OkStatus() : absl::InternalError("write failed");
}

absl::Status ActorCritic::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot read ", path));
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    return absl::DataLossError("not a parameter record");
  }
  Mlp p = policy_, v = value_;
  if (auto s = ReadNet(in, p); !s.ok()) return s;
  if (auto s = ReadNet(in, v); !s.ok()) return s;
  policy_ = std::move(p);
  value_ = std::move(v);
  return absl::OkStatus();
}

RlDispatcher::RlDispatcher(ActorCritic* agent, std::vector<ModelProfile> models,
                           EnsembleTable table, std::vector<int> batch_sizes,
                           double tau, const RlConfig& conf, uint64_t seed, bool train)
    : agent_(agent),
      models_(std::move(models)),
      table_(std::move(table)),
      batch_sizes_(std::move(batch_sizes)),
      tau_(tau),
      conf_(conf),
      rng_(DeriveSeed(seed, "rl-act")),
      train_(train) {
  traj_.gamma = conf_.gamma;
}

void RlDispatcher::BeginEpisode() {
  traj_.steps.clear();
  episode_reward_ = 0.0;
}

absl::StatusOr<DispatchDecision> RlDispatcher::Decide(const ServingView& view) {
  DispatchDecision out;
  if (view.queue->empty()) return out;
  const SchedulerState s =
      Featurize(*view.queue, *view.busy_until, view.now, models_, batch_sizes_,
                conf_.queue_len, models_.size() == 1);
  VectorXd x = s.Features(tau_);
  const int a = agent_->Act(x, rng_, train_ ? ActMode::kSample : ActMode::kGreedy);
  auto action = ActionDecode(a, models_.size(), batch_sizes_);
  if (!action.ok()) return action.status();
  if (train_) traj_.steps.push_back({std::move(x), a, 0.0});
  out.dispatches.push_back({action->mask, action->b});
  return out;
}

void RlDispatcher::OnExecuted(const Executed& e) {
  const double r =
      Reward(e.dispatch.mask, e.count, e.overdue, conf_.beta, table_).value_or(0.0);
  episode_reward_ += r;
  if (train_ && !traj_.steps.empty()) traj_.steps.back().reward = r;
}

absl::Status RlDispatcher::EndEpisode() {
  ++episodes_;
  if (!train_ || traj_.steps.empty()) return absl::OkStatus();
  absl::Status s = agent_->Update(traj_);
  traj_.steps.clear();
  if (absl::IsInternal(s)) {
    ++skipped_updates_;
    return absl::OkStatus();
  }
  return s;
}

}  // namespace rafiki
