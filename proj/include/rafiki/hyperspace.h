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

// Declarative hyper-parameter spaces.
//
// A space is an ordered list of knobs. Each knob is either a numeric range
// (half-open, optionally log scaled) or a categorical choice. Knobs may
// depend on earlier-drawn knobs; dependent knobs are drawn after the knobs
// they name and may be adjusted by a registered hook that sees the partial
// assignment.
//
//   HookRegistry hooks = HookRegistry::WithBuiltins();
//   std::vector<KnobDef> knobs = {
//       *DefineRange("lr", 1e-4, 1.0, DType::kFloat, {}, {}, /*log_scale=*/true),
//       *DefineRange("decay", 1e-6, 1e-2, DType::kFloat, {"lr"}, "cap_decay"),
//       *DefineChoice("kernel", {"Linear", "RBF", "Poly"}),
//   };
//   absl::StatusOr<HyperSpace> space = HyperSpace::Build(knobs, hooks);
//   Rng rng(7);
//   Trial t = space->Sample(rng, /*trial_id=*/0);

#ifndef RAFIKI_HYPERSPACE_H_
#define RAFIKI_HYPERSPACE_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "absl/status/statusor.h"
#include "rafiki/random.h"

namespace rafiki {

using KnobValue = std::variant<int64_t, double, std::string>;
using Assignment = std::map<std::string, KnobValue>;

std::string KnobValueToString(const KnobValue& v);
// Numeric view of a value; strings yield nullopt.
std::optional<double> KnobValueAsDouble(const KnobValue& v);

enum class DType { kFloat, kInteger };

absl::StatusOr<DType> ParseDType(std::string_view name);
std::string_view DTypeName(DType dtype);

struct RangeDomain {
  double min = 0.0;
  double max = 1.0;
  DType dtype = DType::kFloat;
  bool log_scale = false;

  // Inclusive integer bounds {ceil(min), ..., ceil(max) - 1}.
  int64_t int_lo() const;
  int64_t int_hi() const;
};

struct ChoiceDomain {
  std::vector<KnobValue> values;
};

using KnobDomain = std::variant<RangeDomain, ChoiceDomain>;

struct KnobDef {
  std::string name;
  KnobDomain domain;
  std::vector<std::string> depends;
  std::optional<std::string> pre_hook;
  std::optional<std::string> post_hook;

  bool is_choice() const { return std::holds_alternative<ChoiceDomain>(domain); }
};

absl::StatusOr<KnobDef> DefineRange(std::string name, double min, double max,
                                    DType dtype,
                                    std::vector<std::string> depends = {},
                                    std::optional<std::string> post_hook = {},
                                    bool log_scale = false);

absl::StatusOr<KnobDef> DefineChoice(std::string name,
                                     std::vector<KnobValue> values,
                                     std::vector<std::string> depends = {},
                                     std::optional<std::string> post_hook = {});

bool DomainContains(const KnobDomain& domain, const KnobValue& value);

// Post hooks map (partial assignment, proposed value) to an adjusted value.
// Pre hooks may shrink the domain before the draw. Both must be pure. A post
// hook must return a value inside the knob's domain; HyperSpace::Build probes
// every referenced post hook and rejects the space if it does not.
using PostHook = std::function<KnobValue(const Assignment&, const KnobValue&)>;
using PreHook = std::function<KnobDomain(const Assignment&, const KnobDomain&)>;

class HookRegistry {
 public:
  // Registry preloaded with:
  //   cap_by_depends  min(value, every numeric depends value), cast back to
  //                   the proposed value's type.
  //   cap_decay       alias of cap_by_depends.
  static HookRegistry WithBuiltins();

  void RegisterPost(std::string name, PostHook hook);
  void RegisterPre(std::string name, PreHook hook);

  const PostHook* FindPost(const std::string& name) const;
  const PreHook* FindPre(const std::string& name) const;

 private:
  std::map<std::string, PostHook> post_;
  std::map<std::string, PreHook> pre_;
};

struct Violation {
  enum class Kind {
    kDuplicateKnob,
    kUnknownKnob,
    kCycle,
    kMissingHook,
    kHookContract,
  };
  Kind kind;
  // Knob names involved; for kCycle the members of the cycle in order.
  std::vector<std::string> knobs;
  std::string message;
};

std::string_view ViolationKindName(Violation::Kind kind);

// Full list of structural problems in the knob list. Never fails early.
std::vector<Violation> Validate(const std::vector<KnobDef>& knobs,
                                const HookRegistry& hooks);

struct TrialOrigin {
  enum class Kind { kRandomInit, kWarm };
  Kind kind = Kind::kRandomInit;
  int64_t source = -1;  // donor trial id for kWarm

  static TrialOrigin Random() { return {}; }
  static TrialOrigin Warm(int64_t source) { return {Kind::kWarm, source}; }
  bool operator==(const TrialOrigin&) const = default;
};

struct Trial {
  int64_t trial_id = -1;
  Assignment assignment;
  TrialOrigin origin;

  bool operator==(const Trial&) const = default;
};

class HyperSpace {
 public:
  // Validates and freezes the space. The error message lists every violation.
  static absl::StatusOr<HyperSpace> Build(std::vector<KnobDef> knobs,
                                          HookRegistry hooks);

  const std::vector<KnobDef>& knobs() const { return knobs_; }
  const KnobDef* Find(const std::string& name) const;
  // Knob indices in draw order (dependencies first, declaration order
  // otherwise).
  const std::vector<size_t>& draw_order() const { return order_; }

  Assignment SampleAssignment(Rng& rng) const;
  Trial Sample(Rng& rng, int64_t trial_id) const;

  // Every knob present exactly once and inside its domain.
  bool IsValid(const Assignment& assignment) const;

  size_t encoded_dim() const { return encoded_dim_; }
  // Ranges are min-max normalized (log space for log_scale), integers after
  // casting, choices one-hot.
  std::vector<double> Encode(const Assignment& assignment) const;
  // Inverse of Encode. Integers round to the nearest admissible value and
  // choices take the arg-max coordinate.
  Assignment Decode(std::span<const double> x) const;

  // True when every knob is a choice or an integer range.
  bool IsFinite() const;
  // Number of distinct assignments of a finite space, ignoring hooks.
  // Saturates at UINT64_MAX.
  uint64_t Cardinality() const;
  // All assignments of a finite space in lexicographic knob order, with post
  // hooks applied; duplicates produced by hooks are removed.
  std::vector<Assignment> Enumerate() const;

 private:
  HyperSpace(std::vector<KnobDef> knobs, HookRegistry hooks,
             std::vector<size_t> order);

  KnobValue Draw(const KnobDef& knob, const Assignment& partial,
                 Rng& rng) const;
  KnobValue ApplyPost(const KnobDef& knob, const Assignment& partial,
                      KnobValue proposed) const;

  std::vector<KnobDef> knobs_;
  HookRegistry hooks_;
  std::vector<size_t> order_;
  size_t encoded_dim_ = 0;
};

}  // namespace rafiki

#endif  // RAFIKI_HYPERSPACE_H_
