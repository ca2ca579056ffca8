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

#include "rafiki/workload.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <queue>
#include <set>

#include <json.hpp>

#include "absl/strings/str_cat.h"
#include "rafiki/csv.h"

namespace rafiki {

using json = nlohmann::json;

double RateParams::Rate(double t) const {
  return k * std::sin(2.0 * std::numbers::pi * t / T) + b;
}

RateParams SolveRateParams(double ref, double T) {
  const double s0 = std::sin(0.3 * std::numbers::pi);
  RateParams p;
  p.ref = ref;
  p.T = T;
  p.k = 0.1 * ref / (1.0 - s0);
  p.b = 1.1 * ref - p.k;
  return p;
}

int64_t Arrivals(const RateParams& params, double t, double dt, Rng& rng,
                 double noise_sd) {
  double phi = 0.0;
  if (noise_sd > 0.0) phi = std::normal_distribution<double>(0.0, noise_sd)(rng);
  return std::llround(std::max(0.0, dt * params.Rate(t) * (1.0 + phi)));
}

WorkloadConf ServingScenario::Resolved() const {
  WorkloadConf w = workload;
  const double tau = batching.tau;
  if (w.period <= 0.0) w.period = 500.0 * tau;
  if (w.duration <= 0.0) w.duration = w.period;
  if (w.window <= 0.0) w.window = tau;
  if (w.dt <= 0.0) w.dt = std::min(tau / 10.0, 0.01 * w.period);
  if (w.queue_capacity == 0 && !batching.batch_sizes.empty()) {
    w.queue_capacity = 4 * static_cast<size_t>(batching.batch_sizes.back()) * models.size();
  }
  return w;
}

absl::Status ServingScenario::Validate() const {
  if (models.empty()) return absl::InvalidArgumentError("ConfigError: no models");
  if (models.size() > 16) return absl::InvalidArgumentError("ConfigError: more than 16 models");
  const auto& bs = batching.batch_sizes;
  if (bs.empty() || !std::is_sorted(bs.begin(), bs.end()) ||
      std::adjacent_find(bs.begin(), bs.end()) != bs.end() || bs.front() < 1) {
    return absl::InvalidArgumentError("ConfigError: B must be strictly ascending and >= 1");
  }
  if (!(batching.tau > 0.0) || !(batching.delta >= 0.0)) {
    return absl::InvalidArgumentError("ConfigError: need tau > 0 and delta >= 0");
  }
  for (const auto& m : models) {
    if (auto s = m.Validate(); !s.ok()) {
      return absl::InvalidArgumentError(absl::StrCat("ConfigError: ", std::string(s.message())));
    }
    for (int b : bs) {
      if (!m.Cost(b).ok()) {
        return absl::InvalidArgumentError(
            absl::StrCat("ConfigError: model ", m.name, " has no latency for b=", b));
      }
    }
  }
  if (table.accuracy.size() != (size_t{1} << models.size())) {
    return absl::InvalidArgumentError("ConfigError: ensemble table does not match models");
  }
  const WorkloadConf w = Resolved();
  if (!(w.duration >= w.period)) {
    return absl::InvalidArgumentError("ConfigError: duration shorter than one cycle");
  }
  if (!(rate.T > 0.0)) return absl::InvalidArgumentError("ConfigError: rate period <= 0");
  return absl::OkStatus();
}

double WindowMetrics::mean_accuracy() const {
  return finished() > 0 ? accuracy_sum / static_cast<double>(finished()) : 0.0;
}

double WindowMetrics::mean_latency() const {
  return finished() > 0 ? latency_sum / static_cast<double>(finished()) : 0.0;
}

int64_t EpisodeMetrics::total_arriving() const {
  int64_t n = 0;
  for (const auto& w : windows) n += w.arriving;
  return n;
}

int64_t EpisodeMetrics::total_overdue() const {
  int64_t n = 0;
  for (const auto& w : windows) n += w.overdue;
  return n;
}

int64_t EpisodeMetrics::total_finished() const {
  int64_t n = 0;
  for (const auto& w : windows) n += w.finished();
  return n;
}

double EpisodeMetrics::MeanAccuracy() const {
  return MeanAccuracy(std::vector<bool>(windows.size(), true));
}

double EpisodeMetrics::OverduePerSec() const {
  return OverduePerSec(std::vector<bool>(windows.size(), true));
}

double EpisodeMetrics::MeanAccuracy(const std::vector<bool>& mask) const {
  double sum = 0.0;
  int n = 0;
  for (size_t i = 0; i < windows.size(); ++i) {
    if (!mask[i] || windows[i].finished() == 0) continue;
    sum += windows[i].mean_accuracy();
    ++n;
  }
  return n > 0 ? sum / n : 0.0;
}

double EpisodeMetrics::OverduePerSec(const std::vector<bool>& mask) const {
  int64_t overdue = 0;
  int n = 0;
  for (size_t i = 0; i < windows.size(); ++i) {
    if (!mask[i]) continue;
    overdue += windows[i].overdue;
    ++n;
  }
  return n > 0 ? static_cast<double>(overdue) / (n * window) : 0.0;
}

std::vector<bool> EpisodeMetrics::LowRateWindows(double fraction) const {
  std::vector<double> rates;
  for (const auto& w : windows) rates.push_back(w.rate);
  std::vector<bool> mask(windows.size(), false);
  if (rates.empty()) return mask;
  std::vector<double> sorted = rates;
  std::sort(sorted.begin(), sorted.end());
  const size_t cut = std::max<size_t>(
      1, static_cast<size_t>(std::floor(fraction * static_cast<double>(sorted.size()))));
  const double threshold = sorted[cut - 1];
  for (size_t i = 0; i < rates.size(); ++i) mask[i] = rates[i] <= threshold;
  return mask;
}

absl::Status EpisodeMetrics::CheckConservation() const {
  for (size_t i = 0; i < windows.size(); ++i) {
    const auto& w = windows[i];
    const int64_t rhs = w.completed + w.overdue + w.dropped +
                        (w.queued_end - w.queued_start) +
                        (w.inflight_end - w.inflight_start);
    if (w.arriving != rhs) {
      return absl::InternalError(absl::StrCat("conservation broken in window ", i,
                                              ": arriving ", w.arriving, " vs ", rhs));
    }
    if (i > 0 && (w.queued_start != windows[i - 1].queued_end ||
                  w.inflight_start != windows[i - 1].inflight_end)) {
      return absl::InternalError(absl::StrCat("window ", i, " does not chain"));
    }
  }
  return absl::OkStatus();
}

absl::Status EpisodeMetrics::WriteCsv(const std::string& path) const {
  CsvTable t({"t", "arriving", "completed", "overdue", "dropped", "mean_accuracy",
              "mean_latency", "queued", "in_flight"});
  for (const auto& w : windows) {
    auto s = t.AddRow({CsvNumber(w.t0), absl::StrCat(w.arriving), absl::StrCat(w.completed),
                       absl::StrCat(w.overdue), absl::StrCat(w.dropped),
                       CsvNumber(w.mean_accuracy()), CsvNumber(w.mean_latency()),
                       absl::StrCat(w.queued_end), absl::StrCat(w.inflight_end)});
    if (!s.ok()) return s;
  }
  return t.Write(path);
}

namespace {

enum class EventKind { kArrival, kComplete, kWake };

struct Event {
  double time;
  uint64_t seq;
  EventKind kind;
  int64_t payload;  // arrival tick or batch index
  bool operator>(const Event& o) const {
    return time != o.time ? time > o.time : seq > o.seq;
  }
};

struct Batch {
  std::vector<Request> requests;
  double start = 0.0;
  double finish = 0.0;
  double accuracy = 0.0;
};

class EventLoop {
 public:
  EventLoop(Dispatcher& dispatcher, const ServingScenario& scenario, uint64_t seed,
            std::ostream* trace)
      : dispatcher_(dispatcher),
        sc_(scenario),
        conf_(scenario.Resolved()),
        queue_(conf_.queue_capacity),
        busy_until_(scenario.models.size(), 0.0),
        rng_(MakeRng(seed, "arrivals")),
        trace_(trace) {}

  absl::StatusOr<EpisodeMetrics> Run() {
    const size_t num_windows =
        static_cast<size_t>(std::ceil(conf_.duration / conf_.window - 1e-9));
    metrics_.duration = static_cast<double>(num_windows) * conf_.window;
    metrics_.window = conf_.window;
    metrics_.windows.resize(num_windows);
    for (size_t i = 0; i < num_windows; ++i) {
      metrics_.windows[i].t0 = i * conf_.window;
      metrics_.windows[i].rate = sc_.rate.Rate((i + 0.5) * conf_.window);
    }
    dispatcher_.BeginEpisode();
    Push(0.0, EventKind::kArrival, 0);
    while (!events_.empty()) {
      const double t = events_.top().time;
      if (t >= metrics_.duration) break;
      AdvanceWindows(t);
      now_ = t;
      while (!events_.empty() && events_.top().time == t) {
        Event e = events_.top();
        events_.pop();
        if (auto s = Handle(e); !s.ok()) return s;
      }
      if (auto s = Consult(); !s.ok()) return s;
    }
    AdvanceWindows(metrics_.duration);
    if (auto s = dispatcher_.EndEpisode(); !s.ok()) return s;
    return std::move(metrics_);
  }

 private:
  void Push(double time, EventKind kind, int64_t payload) {
    events_.push({time, seq_++, kind, payload});
  }

  WindowMetrics& Current() { return metrics_.windows[window_]; }

  // Closes every window that ends at or before t.
  void AdvanceWindows(double t) {
    while (window_ < metrics_.windows.size() &&
           t >= static_cast<double>(window_ + 1) * conf_.window) {
      auto& w = metrics_.windows[window_];
      w.queued_end = static_cast<int64_t>(queue_.size());
      w.inflight_end = inflight_;
      ++window_;
      if (window_ < metrics_.windows.size()) {
        metrics_.windows[window_].queued_start = w.queued_end;
        metrics_.windows[window_].inflight_start = w.inflight_end;
      }
    }
  }

  absl::Status Handle(const Event& e) {
    switch (e.kind) {
      case EventKind::kArrival: {
        const int64_t n = Arrivals(sc_.rate, now_, conf_.dt, rng_, conf_.noise_sd);
        int64_t dropped = 0;
        for (int64_t i = 0; i < n; ++i) {
          if (!queue_.Push({next_id_++, now_, 0})) ++dropped;
        }
        Current().arriving += n;
        Current().dropped += dropped;
        if (trace_ != nullptr && n > 0) {
          Trace({{"t", now_}, {"ev", "arrive"}, {"n", n}, {"dropped", dropped}});
        }
        const double next = static_cast<double>(e.payload + 1) * conf_.dt;
        if (next < metrics_.duration) Push(next, EventKind::kArrival, e.payload + 1);
        break;
      }
      case EventKind::kComplete: {
        Batch& batch = batches_[e.payload];
        auto& w = Current();
        for (const auto& r : batch.requests) {
          const double latency = batch.finish - r.arrival;
          if (latency > sc_.batching.tau) {
            ++w.overdue;
          } else {
            ++w.completed;
          }
          w.accuracy_sum += batch.accuracy;
          w.latency_sum += latency;
        }
        inflight_ -= static_cast<int64_t>(batch.requests.size());
        if (trace_ != nullptr) {
          Trace({{"t", now_}, {"ev", "complete"}, {"batch", e.payload},
                 {"n", batch.requests.size()}});
        }
        batch.requests.clear();
        batch.requests.shrink_to_fit();
        break;
      }
      case EventKind::kWake:
        wakes_.erase(now_);
        break;
    }
    return absl::OkStatus();
  }

  bool AllFree(uint32_t mask) const {
    for (size_t m = 0; m < busy_until_.size(); ++m) {
      if ((mask & (1u << m)) && busy_until_[m] > now_) return false;
    }
    return true;
  }

  bool AnyFree() const {
    for (double t : busy_until_) {
      if (t <= now_) return true;
    }
    return false;
  }

  absl::Status Execute(const Dispatch& d) {
    const auto& bs = sc_.batching.batch_sizes;
    if (std::find(bs.begin(), bs.end(), d.b) == bs.end()) {
      return absl::InvalidArgumentError(absl::StrCat("dispatch with b=", d.b, " not in B"));
    }
    auto cost = EnsembleCost(sc_.models, d.mask, d.b);
    if (!cost.ok()) return cost.status();
    auto acc = sc_.table.At(d.mask);
    if (!acc.ok()) return acc.status();
    const size_t queued = queue_.size();
    const double w0 = queue_.empty() ? 0.0 : now_ - queue_.front().arrival;
    Batch batch;
    batch.requests = queue_.PopFront(static_cast<size_t>(d.b));
    batch.start = now_;
    batch.finish = now_ + *cost;
    batch.accuracy = *acc;
    Executed ex{d, now_, *cost, static_cast<int>(batch.requests.size()), 0, *acc};
    for (const auto& r : batch.requests) {
      if (batch.finish - r.arrival > sc_.batching.tau) ++ex.overdue;
    }
    for (size_t m = 0; m < busy_until_.size(); ++m) {
      if (d.mask & (1u << m)) busy_until_[m] = batch.finish;
    }
    inflight_ += ex.count;
    ++metrics_.dispatches;
    if (trace_ != nullptr) {
      Trace({{"t", now_}, {"ev", "dispatch"}, {"batch", batches_.size()}, {"mask", d.mask},
             {"b", d.b}, {"n", ex.count}, {"queued", queued}, {"w0", w0}, {"cost", *cost},
             {"overdue", ex.overdue}});
    }
    Push(batch.finish, EventKind::kComplete, static_cast<int64_t>(batches_.size()));
    batches_.push_back(std::move(batch));
    dispatcher_.OnExecuted(ex);
    return absl::OkStatus();
  }

  void ScheduleWake(double t) {
    if (t <= now_) t = now_ + 1e-9;
    if (t >= metrics_.duration || !wakes_.insert(t).second) return;
    Push(t, EventKind::kWake, 0);
  }

  absl::Status Consult() {
    while (true) {
      if (pending_) {
        if (!AllFree(pending_->mask)) return absl::OkStatus();
        const Dispatch d = *pending_;
        pending_.reset();
        if (auto s = Execute(d); !s.ok()) return s;
        continue;
      }
      if (queue_.empty() || !AnyFree()) return absl::OkStatus();
      ServingView view{now_, &queue_, &busy_until_};
      auto decision = dispatcher_.Decide(view);
      if (!decision.ok()) return decision.status();
      if (decision->wake_at) ScheduleWake(*decision->wake_at);
      if (decision->dispatches.empty()) return absl::OkStatus();
      for (const auto& d : decision->dispatches) {
        if (d.mask == 0 || (d.mask & ~FullMask(sc_.models.size())) != 0) {
          return absl::InvalidArgumentError("EmptySelection: dispatch with invalid mask");
        }
        if (queue_.empty()) break;
        if (!AllFree(d.mask)) {
          pending_ = d;
          if (trace_ != nullptr) {
            Trace({{"t", now_}, {"ev", "defer"}, {"mask", d.mask}, {"b", d.b}});
          }
          break;
        }
        if (auto s = Execute(d); !s.ok()) return s;
      }
    }
  }

  void Trace(const json& j) { *trace_ << j.dump() << '\n'; }

  Dispatcher& dispatcher_;
  const ServingScenario& sc_;
  WorkloadConf conf_;
  RequestQueue queue_;
  std::vector<double> busy_until_;
  Rng rng_;
  std::ostream* trace_;
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> events_;
  std::set<double> wakes_;
  std::vector<Batch> batches_;
  std::optional<Dispatch> pending_;
  EpisodeMetrics metrics_;
  size_t window_ = 0;
  uint64_t seq_ = 0;
  double now_ = 0.0;
  int64_t next_id_ = 0;
  int64_t inflight_ = 0;
};

}  // namespace

absl::StatusOr<EpisodeMetrics> RunEpisode(Dispatcher& dispatcher,
                                          const ServingScenario& scenario,
                                          uint64_t seed, std::ostream* trace) {
  if (auto s = scenario.Validate(); !s.ok()) return s;
  EventLoop loop(dispatcher, scenario, seed, trace);
  return loop.Run();
}

}  // namespace rafiki
