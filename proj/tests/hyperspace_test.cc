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

#include <cmath>

#include <algorithm>

#include <gtest/gtest.h>

#include "rafiki/tune.h"

namespace rafiki {
namespace {

HyperSpace MustBuild(std::vector<KnobDef> knobs) {
  auto s = HyperSpace::Build(std::move(knobs), HookRegistry::WithBuiltins());
  EXPECT_TRUE(s.ok()) << s.status();
  return *std::move(s);
}

TEST(DefineRange, LearningRateRange) {
  auto k = DefineRange("lr", 1e-4, 1.0, DType::kFloat);
  ASSERT_TRUE(k.ok());
  const auto& r = std::get<RangeDomain>(k->domain);
  EXPECT_EQ(r.min, 1e-4);
  EXPECT_EQ(r.max, 1.0);
  EXPECT_TRUE(DomainContains(k->domain, 1e-4));
  EXPECT_FALSE(DomainContains(k->domain, 1.0));
}

TEST(DefineRange, DegenerateIntegerRangeHasOneValue) {
  auto k = DefineRange("n_layers", 1, 2, DType::kInteger);
  ASSERT_TRUE(k.ok());
  auto space = MustBuild({*k});
  EXPECT_EQ(space.Cardinality(), 1u);
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(space.SampleAssignment(rng).at("n_layers"), KnobValue(int64_t{1}));
  }
}

TEST(DefineRange, RejectsEmptyAndNonPositiveLog) {
  EXPECT_FALSE(DefineRange("x", 1.0, 1.0, DType::kFloat).ok());
  EXPECT_FALSE(DefineRange("x", 2.0, 1.0, DType::kFloat).ok());
  EXPECT_FALSE(DefineRange("x", 0.0, 1.0, DType::kFloat, {}, {}, true).ok());
  EXPECT_FALSE(DefineRange("x", 0.2, 0.8, DType::kInteger).ok());
}

TEST(DefineRange, DependentDecayIsDrawnAfterLr) {
  auto space = MustBuild({*DefineRange("decay", 1e-6, 1e-2, DType::kFloat, {"lr"}, "cap_decay"),
                          *DefineRange("lr", 1e-4, 1.0, DType::kFloat)});
  ASSERT_EQ(space.draw_order().size(), 2u);
  EXPECT_EQ(space.knobs()[space.draw_order()[0]].name, "lr");
  EXPECT_EQ(space.knobs()[space.draw_order()[1]].name, "decay");
}

TEST(DefineChoice, TableChoices) {
  auto kernel = DefineChoice("kernel", {"Linear", "RBF", "Poly"});
  ASSERT_TRUE(kernel.ok());
  EXPECT_EQ(std::get<ChoiceDomain>(kernel->domain).values.size(), 3u);
  auto whitening = DefineChoice("whitening", {"PCA", "ZCA"});
  ASSERT_TRUE(whitening.ok());
  EXPECT_EQ(std::get<ChoiceDomain>(whitening->domain).values.size(), 2u);
}

TEST(DefineChoice, ConstantKnob) {
  auto space = MustBuild({*DefineChoice("only", {"x"})});
  Rng rng(1);
  EXPECT_EQ(space.SampleAssignment(rng).at("only"), KnobValue(std::string("x")));
}

TEST(DefineChoice, RejectsEmptyAndDuplicates) {
  EXPECT_FALSE(DefineChoice("k", {}).ok());
  EXPECT_FALSE(DefineChoice("k", {"a", "a"}).ok());
}

TEST(Validate, TwoCycle) {
  auto v = Validate({*DefineRange("a", 0, 1, DType::kFloat, {"b"}),
                     *DefineRange("b", 0, 1, DType::kFloat, {"a"})},
                    HookRegistry::WithBuiltins());
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, Violation::Kind::kCycle);
  EXPECT_EQ(v[0].knobs, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(v[0].message, "CycleError(a,b)");
}

TEST(Validate, UnknownDependency) {
  auto v = Validate({*DefineRange("a", 0, 1, DType::kFloat, {"foo"})},
                    HookRegistry::WithBuiltins());
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, Violation::Kind::kUnknownKnob);
  EXPECT_NE(v[0].message.find("foo"), std::string::npos);
}

TEST(Validate, ReportsEveryViolation) {
  auto v = Validate({*DefineRange("a", 0, 1, DType::kFloat, {"foo"}, "nohook"),
                     *DefineRange("a", 0, 1, DType::kFloat)},
                    HookRegistry::WithBuiltins());
  std::vector<Violation::Kind> kinds;
  for (const auto& x : v) kinds.push_back(x.kind);
  EXPECT_NE(std::find(kinds.begin(), kinds.end(), Violation::Kind::kUnknownKnob), kinds.end());
  EXPECT_NE(std::find(kinds.begin(), kinds.end(), Violation::Kind::kMissingHook), kinds.end());
  EXPECT_NE(std::find(kinds.begin(), kinds.end(), Violation::Kind::kDuplicateKnob), kinds.end());
}

// Five rows of the hyper-parameter table; a topological order must exist and
// every knob must follow the knobs it depends on.
TEST(Validate, FiveKnobTableSpace) {
  std::vector<KnobDef> knobs = {
      *DefineChoice("kernel", {"Linear", "RBF", "Poly"}),
      *DefineChoice("whitening", {"PCA", "ZCA"}),
      *DefineRange("lr", 1e-4, 1.0, DType::kFloat, {}, {}, true),
      *DefineRange("decay", 1e-6, 1e-2, DType::kFloat, {"lr"}, "cap_decay", true),
      *DefineRange("n_layers", 1, 8, DType::kInteger),
  };
  EXPECT_TRUE(Validate(knobs, HookRegistry::WithBuiltins()).empty());
  auto space = MustBuild(knobs);
  std::vector<std::string> seen;
  for (size_t i : space.draw_order()) {
    for (const auto& d : space.knobs()[i].depends) {
      EXPECT_NE(std::find(seen.begin(), seen.end(), d), seen.end());
    }
    seen.push_back(space.knobs()[i].name);
  }
  EXPECT_EQ(seen.size(), 5u);
}

TEST(Sample, SameSeedSameTrial) {
  auto space = MustBuild(SurrogateKnobs());
  Rng a(7), b(7);
  EXPECT_EQ(space.Sample(a, 0), space.Sample(b, 0));
}

TEST(Sample, DecayCappedByLr) {
  auto space = MustBuild({*DefineRange("lr", 1e-4, 1e-2, DType::kFloat, {}, {}, true),
                          *DefineRange("decay", 1e-6, 1e-1, DType::kFloat, {"lr"}, "cap_decay",
                                       true)});
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    auto h = space.SampleAssignment(rng);
    EXPECT_LE(std::get<double>(h.at("decay")), std::get<double>(h.at("lr")));
    EXPECT_TRUE(space.IsValid(h));
  }
}

TEST(Encode, LowerBoundMapsToZero) {
  auto space = MustBuild({*DefineRange("lr", 1e-4, 1.0, DType::kFloat, {}, {}, true)});
  auto x = space.Encode({{"lr", 1e-4}});
  ASSERT_EQ(x.size(), 1u);
  EXPECT_DOUBLE_EQ(x[0], 0.0);
}

TEST(Encode, ChoiceIsOneHot) {
  auto space = MustBuild({*DefineChoice("kernel", {"Linear", "RBF", "Poly"})});
  EXPECT_EQ(space.Encode({{"kernel", std::string("RBF")}}), (std::vector<double>{0, 1, 0}));
}

TEST(Encode, RoundTrip200) {
  auto space = MustBuild(SurrogateKnobs());
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    auto h = space.SampleAssignment(rng);
    auto back = space.Decode(space.Encode(h));
    ASSERT_EQ(back.size(), h.size());
    for (const auto& [name, v] : h) {
      if (const double* d = std::get_if<double>(&v)) {
        EXPECT_NEAR(std::get<double>(back.at(name)), *d, 1e-12 * std::max(1.0, std::fabs(*d)))
            << name;
      } else {
        EXPECT_EQ(back.at(name), v) << name;
      }
    }
  }
}

TEST(Enumerate, GridCardinality) {
  auto space = MustBuild({*DefineChoice("a", {int64_t{1}, int64_t{2}}),
                          *DefineRange("b", 0, 2, DType::kInteger)});
  EXPECT_TRUE(space.IsFinite());
  EXPECT_EQ(space.Cardinality(), 4u);
  EXPECT_EQ(space.Enumerate().size(), 4u);
}

}  // namespace
}  // namespace rafiki
