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

#include "rafiki/hyperspace.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"

namespace rafiki {

std::string KnobValueToString(const KnobValue& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return x;
        } else if constexpr (std::is_same_v<T, double>) {
          std::ostringstream os;
          os.precision(17);
          os << x;
          return os.str();
        } else {
          return std::to_string(x);
        }
      },
      v);
}

std::optional<double> KnobValueAsDouble(const KnobValue& v) {
  if (const auto* i = std::get_if<int64_t>(&v)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  return std::nullopt;
}

absl::StatusOr<DType> ParseDType(std::string_view name) {
  if (name == "float" || name == "real") return DType::kFloat;
  if (name == "int" || name == "integer") return DType::kInteger;
  if (name == "categorical" || name == "string") {
    return absl::InvalidArgumentError(
        "InvalidDomain: categorical ranges are declared as choice knobs");
  }
  return absl::InvalidArgumentError(
      absl::StrCat("InvalidDomain: unknown dtype '", std::string(name), "'"));
}

std::string_view DTypeName(DType dtype) {
  return dtype == DType::kFloat ? "float" : "integer";
}

int64_t RangeDomain::int_lo() const {
  return static_cast<int64_t>(std::ceil(min));
}

int64_t RangeDomain::int_hi() const {
  return static_cast<int64_t>(std::ceil(max)) - 1;
}

absl::StatusOr<KnobDef> DefineRange(std::string name, double min, double max,
                                    DType dtype,
                                    std::vector<std::string> depends,
                                    std::optional<std::string> post_hook,
                                    bool log_scale) {
  if (!std::isfinite(min) || !std::isfinite(max) || !(min < max)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "InvalidDomain: knob '", name, "' needs min < max, got [", min, ", ",
        max, ")"));
  }
  RangeDomain range{min, max, dtype, log_scale};
  if (dtype == DType::kInteger && range.int_hi() < range.int_lo()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "InvalidDomain: integer knob '", name, "' has no integer in [", min,
        ", ", max, ")"));
  }
  if (log_scale && min <= 0.0) {
    return absl::InvalidArgumentError(absl::StrCat(
        "InvalidDomain: log-scale knob '", name, "' needs min > 0"));
  }
  return KnobDef{std::move(name), range, std::move(depends), std::nullopt,
                 std::move(post_hook)};
}

absl::StatusOr<KnobDef> DefineChoice(std::string name,
                                     std::vector<KnobValue> values,
                                     std::vector<std::string> depends,
                                     std::optional<std::string> post_hook) {
  if (values.empty()) {
    return absl::InvalidArgumentError(
        absl::StrCat("InvalidDomain: choice knob '", name, "' is empty"));
  }
  for (size_t i = 0; i < values.size(); ++i) {
    for (size_t j = i + 1; j < values.size(); ++j) {
      if (values[i] == values[j]) {
        return absl::InvalidArgumentError(absl::StrCat(
            "InvalidDomain: choice knob '", name, "' lists '",
            KnobValueToString(values[i]), "' twice"));
      }
    }
  }
  return KnobDef{std::move(name), ChoiceDomain{std::move(values)},
                 std::move(depends), std::nullopt, std::move(post_hook)};
}

bool DomainContains(const KnobDomain& domain, const KnobValue& value) {
  if (const auto* choice = std::get_if<ChoiceDomain>(&domain)) {
    return std::find(choice->values.begin(), choice->values.end(), value) !=
           choice->values.end();
  }
  const auto& range = std::get<RangeDomain>(domain);
  if (range.dtype == DType::kInteger) {
    const auto* i = std::get_if<int64_t>(&value);
    return i != nullptr && *i >= range.int_lo() && *i <= range.int_hi();
  }
  const auto* d = std::get_if<double>(&value);
  return d != nullptr && *d >= range.min && *d < range.max;
}

HookRegistry HookRegistry::WithBuiltins() {
  HookRegistry registry;
  PostHook cap = [](const Assignment& partial, const KnobValue& proposed) {
    std::optional<double> v = KnobValueAsDouble(proposed);
    if (!v) return proposed;
    double capped = *v;
    for (const auto& [name, value] : partial) {
      if (auto d = KnobValueAsDouble(value)) capped = std::min(capped, *d);
    }
    if (std::holds_alternative<int64_t>(proposed)) {
      return KnobValue(static_cast<int64_t>(std::floor(capped)));
    }
    return KnobValue(capped);
  };
  registry.RegisterPost("cap_by_depends", cap);
  registry.RegisterPost("cap_decay", cap);
  return registry;
}

void HookRegistry::RegisterPost(std::string name, PostHook hook) {
  post_[std::move(name)] = std::move(hook);
}

void HookRegistry::RegisterPre(std::string name, PreHook hook) {
  pre_[std::move(name)] = std::move(hook);
}

const PostHook* HookRegistry::FindPost(const std::string& name) const {
  auto it = post_.find(name);
  return it == post_.end() ? nullptr : &it->second;
}

const PreHook* HookRegistry::FindPre(const std::string& name) const {
  auto it = pre_.find(name);
  return it == pre_.end() ? nullptr : &it->second;
}

std::string_view ViolationKindName(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::kDuplicateKnob:
      return "DuplicateKnob";
    case Violation::Kind::kUnknownKnob:
      return "UnknownKnob";
    case Violation::Kind::kCycle:
      return "CycleError";
    case Violation::Kind::kMissingHook:
      return "MissingHook";
    case Violation::Kind::kHookContract:
      return "HookContract";
  }
  return "?";
}

namespace {

// Kahn's algorithm; ties resolved by declaration order. Returns nullopt when
// the depends relation has a cycle. Unknown names are ignored.
std::optional<std::vector<size_t>> TopologicalOrder(
    const std::vector<KnobDef>& knobs) {
  std::map<std::string, size_t> index;
  for (size_t i = 0; i < knobs.size(); ++i) index.emplace(knobs[i].name, i);
  std::vector<int> indegree(knobs.size(), 0);
  std::vector<std::vector<size_t>> users(knobs.size());
  for (size_t i = 0; i < knobs.size(); ++i) {
    std::set<size_t> seen;
    for (const auto& dep : knobs[i].depends) {
      auto it = index.find(dep);
      if (it == index.end() || !seen.insert(it->second).second) continue;
      users[it->second].push_back(i);
      ++indegree[i];
    }
  }
  std::set<size_t> ready;
  for (size_t i = 0; i < knobs.size(); ++i) {
    if (indegree[i] == 0) ready.insert(i);
  }
  std::vector<size_t> order;
  while (!ready.empty()) {
    size_t next = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(next);
    for (size_t u : users[next]) {
      if (--indegree[u] == 0) ready.insert(u);
    }
  }
  if (order.size() != knobs.size()) return std::nullopt;
  return order;
}

void FindCycles(const std::vector<KnobDef>& knobs,
                std::vector<Violation>& out) {
  std::map<std::string, size_t> index;
  for (size_t i = 0; i < knobs.size(); ++i) index.emplace(knobs[i].name, i);
  enum Color { kWhite, kGrey, kBlack };
  std::vector<Color> color(knobs.size(), kWhite);
  std::vector<size_t> stack;
  std::set<std::set<size_t>> reported;

  std::function<void(size_t)> visit = [&](size_t v) {
    color[v] = kGrey;
    stack.push_back(v);
    for (const auto& dep : knobs[v].depends) {
      auto it = index.find(dep);
      if (it == index.end()) continue;
      size_t w = it->second;
      if (color[w] == kGrey) {
        auto start = std::find(stack.begin(), stack.end(), w);
        std::vector<size_t> cycle(start, stack.end());
        std::set<size_t> key(cycle.begin(), cycle.end());
        if (reported.insert(key).second) {
          // Rotate so the earliest-declared member leads.
          std::rotate(cycle.begin(),
                      std::min_element(cycle.begin(), cycle.end()),
                      cycle.end());
          Violation violation{Violation::Kind::kCycle, {}, {}};
          for (size_t c : cycle) violation.knobs.push_back(knobs[c].name);
          violation.message = absl::StrCat(
              "CycleError(", absl::StrJoin(violation.knobs, ","), ")");
          out.push_back(std::move(violation));
        }
      } else if (color[w] == kWhite) {
        visit(w);
      }
    }
    stack.pop_back();
    color[v] = kBlack;
  };
  for (size_t i = 0; i < knobs.size(); ++i) {
    if (color[i] == kWhite) visit(i);
  }
}

KnobValue DrawFromDomain(const KnobDomain& domain, Rng& rng) {
  if (const auto* choice = std::get_if<ChoiceDomain>(&domain)) {
    std::uniform_int_distribution<size_t> pick(0, choice->values.size() - 1);
    return choice->values[pick(rng)];
  }
  const auto& range = std::get<RangeDomain>(domain);
  if (range.dtype == DType::kInteger) {
    std::uniform_int_distribution<int64_t> pick(range.int_lo(), range.int_hi());
    return pick(rng);
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double x;
  if (range.log_scale) {
    const double lo = std::log(range.min), hi = std::log(range.max);
    x = std::exp(lo + unit(rng) * (hi - lo));
  } else {
    x = range.min + unit(rng) * (range.max - range.min);
  }
  // Rounding in exp/fma can land exactly on max; keep the interval half-open.
  if (x >= range.max) x = std::nextafter(range.max, range.min);
  if (x < range.min) x = range.min;
  return x;
}

bool IsSubDomain(const KnobDomain& inner, const KnobDomain& outer) {
  if (inner.index() != outer.index()) return false;
  if (const auto* choice = std::get_if<ChoiceDomain>(&inner)) {
    if (choice->values.empty()) return false;
    for (const auto& v : choice->values) {
      if (!DomainContains(outer, v)) return false;
    }
    return true;
  }
  const auto& in = std::get<RangeDomain>(inner);
  const auto& out = std::get<RangeDomain>(outer);
  if (in.dtype != out.dtype || !(in.min < in.max)) return false;
  if (in.dtype == DType::kInteger) {
    return in.int_lo() <= in.int_hi() && in.int_lo() >= out.int_lo() &&
           in.int_hi() <= out.int_hi();
  }
  return in.min >= out.min && in.max <= out.max;
}

constexpr int kHookProbes = 64;

// Hooks only see the knobs they declare in depends.
Assignment VisibleDeps(const KnobDef& knob, const Assignment& partial) {
  Assignment visible;
  for (const auto& dep : knob.depends) {
    auto it = partial.find(dep);
    if (it != partial.end()) visible.emplace(*it);
  }
  return visible;
}

}  // namespace

std::vector<Violation> Validate(const std::vector<KnobDef>& knobs,
                                const HookRegistry& hooks) {
  std::vector<Violation> out;
  std::set<std::string> names;
  for (const auto& knob : knobs) {
    if (!names.insert(knob.name).second) {
      out.push_back({Violation::Kind::kDuplicateKnob,
                     {knob.name},
                     absl::StrCat("DuplicateKnob(", knob.name, ")")});
    }
  }
  for (const auto& knob : knobs) {
    for (const auto& dep : knob.depends) {
      if (!names.contains(dep)) {
        out.push_back({Violation::Kind::kUnknownKnob,
                       {dep},
                       absl::StrCat("UnknownKnob(", dep, ") in depends of '",
                                    knob.name, "'")});
      }
    }
    if (knob.post_hook && hooks.FindPost(*knob.post_hook) == nullptr) {
      out.push_back({Violation::Kind::kMissingHook,
                     {knob.name},
                     absl::StrCat("MissingHook(", *knob.post_hook,
                                  ") for knob '", knob.name, "'")});
    }
    if (knob.pre_hook && hooks.FindPre(*knob.pre_hook) == nullptr) {
      out.push_back({Violation::Kind::kMissingHook,
                     {knob.name},
                     absl::StrCat("MissingHook(", *knob.pre_hook,
                                  ") for knob '", knob.name, "'")});
    }
  }
  FindCycles(knobs, out);
  return out;
}

HyperSpace::HyperSpace(std::vector<KnobDef> knobs, HookRegistry hooks,
                       std::vector<size_t> order)
    : knobs_(std::move(knobs)), hooks_(std::move(hooks)), order_(std::move(order)) {
  for (const auto& knob : knobs_) {
    if (const auto* choice = std::get_if<ChoiceDomain>(&knob.domain)) {
      encoded_dim_ += choice->values.size();
    } else {
      encoded_dim_ += 1;
    }
  }
}

absl::StatusOr<HyperSpace> HyperSpace::Build(std::vector<KnobDef> knobs,
                                             HookRegistry hooks) {
  std::vector<Violation> violations = Validate(knobs, hooks);
  if (violations.empty()) {
    auto order = TopologicalOrder(knobs);
    HyperSpace space(std::move(knobs), std::move(hooks), std::move(*order));
    // Probe the hook contracts on draws from the real space.
    Rng probe(0x5eedULL);
    std::set<std::string> flagged;
    for (int i = 0; i < kHookProbes; ++i) {
      Assignment partial;
      for (size_t idx : space.order_) {
        const KnobDef& knob = space.knobs_[idx];
        KnobDomain domain = knob.domain;
        if (knob.pre_hook) {
          domain = (*space.hooks_.FindPre(*knob.pre_hook))(
              VisibleDeps(knob, partial), knob.domain);
          if (!IsSubDomain(domain, knob.domain)) {
            if (flagged.insert(knob.name).second) {
              violations.push_back(
                  {Violation::Kind::kHookContract,
                   {knob.name},
                   absl::StrCat("HookContract: pre hook '", *knob.pre_hook,
                                "' widened the domain of '", knob.name, "'")});
            }
            domain = knob.domain;
          }
        }
        KnobValue value = DrawFromDomain(domain, probe);
        if (knob.post_hook) {
          KnobValue adjusted = (*space.hooks_.FindPost(*knob.post_hook))(
              VisibleDeps(knob, partial), value);
          if (DomainContains(knob.domain, adjusted)) {
            value = std::move(adjusted);
          } else if (flagged.insert(knob.name).second) {
            violations.push_back(
                {Violation::Kind::kHookContract,
                 {knob.name},
                 absl::StrCat("HookContract: post hook '", *knob.post_hook,
                              "' returned ", KnobValueToString(adjusted),
                              " outside the domain of '", knob.name, "'")});
          }
        }
        partial[knob.name] = std::move(value);
      }
    }
    if (violations.empty()) return space;
  }
  std::vector<std::string> messages;
  for (const auto& v : violations) messages.push_back(v.message);
  return absl::InvalidArgumentError(absl::StrJoin(messages, "; "));
}

const KnobDef* HyperSpace::Find(const std::string& name) const {
  for (const auto& knob : knobs_) {
    if (knob.name == name) return &knob;
  }
  return nullptr;
}

KnobValue HyperSpace::ApplyPost(const KnobDef& knob, const Assignment& partial,
                                KnobValue proposed) const {
  if (!knob.post_hook) return proposed;
  KnobValue adjusted =
      (*hooks_.FindPost(*knob.post_hook))(VisibleDeps(knob, partial), proposed);
  if (!DomainContains(knob.domain, adjusted)) {
    throw std::logic_error(absl::StrCat("post hook '", *knob.post_hook,
                                        "' broke its domain contract on '",
                                        knob.name, "'"));
  }
  return adjusted;
}

KnobValue HyperSpace::Draw(const KnobDef& knob, const Assignment& partial,
                           Rng& rng) const {
  KnobDomain domain = knob.domain;
  if (knob.pre_hook) {
    KnobDomain shrunk =
        (*hooks_.FindPre(*knob.pre_hook))(VisibleDeps(knob, partial), knob.domain);
    if (IsSubDomain(shrunk, knob.domain)) domain = std::move(shrunk);
  }
  return ApplyPost(knob, partial, DrawFromDomain(domain, rng));
}

Assignment HyperSpace::SampleAssignment(Rng& rng) const {
  Assignment assignment;
  for (size_t idx : order_) {
    const KnobDef& knob = knobs_[idx];
    assignment[knob.name] = Draw(knob, assignment, rng);
  }
  return assignment;
}

Trial HyperSpace::Sample(Rng& rng, int64_t trial_id) const {
  return Trial{trial_id, SampleAssignment(rng), TrialOrigin::Random()};
}

bool HyperSpace::IsValid(const Assignment& assignment) const {
  if (assignment.size() != knobs_.size()) return false;
  for (const auto& knob : knobs_) {
    auto it = assignment.find(knob.name);
    if (it == assignment.end() || !DomainContains(knob.domain, it->second)) {
      return false;
    }
  }
  return true;
}

std::vector<double> HyperSpace::Encode(const Assignment& assignment) const {
  std::vector<double> x;
  x.reserve(encoded_dim_);
  for (const auto& knob : knobs_) {
    const KnobValue& value = assignment.at(knob.name);
    if (const auto* choice = std::get_if<ChoiceDomain>(&knob.domain)) {
      for (const auto& candidate : choice->values) {
        x.push_back(candidate == value ? 1.0 : 0.0);
      }
      continue;
    }
    const auto& range = std::get<RangeDomain>(knob.domain);
    if (range.dtype == DType::kInteger) {
      const int64_t lo = range.int_lo(), hi = range.int_hi();
      const double v = *KnobValueAsDouble(value);
      x.push_back(hi == lo ? 0.0 : (v - lo) / static_cast<double>(hi - lo));
    } else if (range.log_scale) {
      const double v = std::get<double>(value);
      x.push_back((std::log(v) - std::log(range.min)) /
                  (std::log(range.max) - std::log(range.min)));
    } else {
      const double v = std::get<double>(value);
      x.push_back((v - range.min) / (range.max - range.min));
    }
  }
  return x;
}

Assignment HyperSpace::Decode(std::span<const double> x) const {
  Assignment assignment;
  size_t pos = 0;
  for (const auto& knob : knobs_) {
    if (const auto* choice = std::get_if<ChoiceDomain>(&knob.domain)) {
      size_t best = 0;
      for (size_t i = 1; i < choice->values.size(); ++i) {
        if (x[pos + i] > x[pos + best]) best = i;
      }
      assignment[knob.name] = choice->values[best];
      pos += choice->values.size();
      continue;
    }
    const auto& range = std::get<RangeDomain>(knob.domain);
    const double c = std::clamp(x[pos++], 0.0, 1.0);
    if (range.dtype == DType::kInteger) {
      const int64_t lo = range.int_lo(), hi = range.int_hi();
      assignment[knob.name] =
          lo + static_cast<int64_t>(std::llround(c * static_cast<double>(hi - lo)));
    } else {
      double v = range.log_scale
                     ? std::exp(std::log(range.min) +
                                c * (std::log(range.max) - std::log(range.min)))
                     : range.min + c * (range.max - range.min);
      if (v >= range.max) v = std::nextafter(range.max, range.min);
      if (v < range.min) v = range.min;
      assignment[knob.name] = v;
    }
  }
  return assignment;
}

bool HyperSpace::IsFinite() const {
  return std::all_of(knobs_.begin(), knobs_.end(), [](const KnobDef& k) {
    const auto* range = std::get_if<RangeDomain>(&k.domain);
    return range == nullptr || range->dtype == DType::kInteger;
  });
}

uint64_t HyperSpace::Cardinality() const {
  if (!IsFinite()) return std::numeric_limits<uint64_t>::max();
  uint64_t total = 1;
  for (const auto& knob : knobs_) {
    uint64_t n;
    if (const auto* choice = std::get_if<ChoiceDomain>(&knob.domain)) {
      n = choice->values.size();
    } else {
      const auto& range = std::get<RangeDomain>(knob.domain);
      n = static_cast<uint64_t>(range.int_hi() - range.int_lo() + 1);
    }
    if (total > std::numeric_limits<uint64_t>::max() / n) {
      return std::numeric_limits<uint64_t>::max();
    }
    total *= n;
  }
  return total;
}

std::vector<Assignment> HyperSpace::Enumerate() const {
  std::vector<Assignment> out;
  if (!IsFinite()) return out;
  std::vector<std::vector<KnobValue>> values(knobs_.size());
  for (size_t i = 0; i < knobs_.size(); ++i) {
    if (const auto* choice = std::get_if<ChoiceDomain>(&knobs_[i].domain)) {
      values[i] = choice->values;
    } else {
      const auto& range = std::get<RangeDomain>(knobs_[i].domain);
      for (int64_t v = range.int_lo(); v <= range.int_hi(); ++v) {
        values[i].push_back(v);
      }
    }
  }
  std::vector<size_t> digit(knobs_.size(), 0);
  std::set<std::vector<std::string>> seen;
  while (true) {
    Assignment raw;
    for (size_t i = 0; i < knobs_.size(); ++i) {
      raw[knobs_[i].name] = values[i][digit[i]];
    }
    Assignment adjusted;
    for (size_t idx : order_) {
      const KnobDef& knob = knobs_[idx];
      adjusted[knob.name] = ApplyPost(knob, adjusted, raw.at(knob.name));
    }
    std::vector<std::string> key;
    for (const auto& [name, value] : adjusted) {
      key.push_back(absl::StrCat(value.index(), ":", KnobValueToString(value)));
    }
    if (seen.insert(std::move(key)).second) out.push_back(std::move(adjusted));
    size_t i = knobs_.size();
    while (i > 0) {
      --i;
      if (++digit[i] < values[i].size()) break;
      digit[i] = 0;
      if (i == 0) return out;
    }
    if (knobs_.empty()) return out;
  }
}

}  // namespace rafiki
