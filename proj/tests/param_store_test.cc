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

#include "rafiki/param_store.h"

#include <cmath>
#include <cstdio>
#include <set>

#include <gtest/gtest.h>

namespace rafiki {
namespace {

LayerDesc Conv(int64_t k, int64_t in, int64_t out) {
  return {"conv", {k, k, in, out}};
}
LayerDesc Dense(int64_t in, int64_t out) { return {"dense", {in, out}}; }

// Every byte of the payload is `tag`, so a matched layer names its donor.
ParamBlob Blob(ShapeSig sig, double perf, char tag, int64_t source = 0) {
  std::string payload(sig.payload_bytes(), tag);
  return {std::move(sig), std::move(payload), perf, source};
}

ShapeSig SigA() { return {{Conv(3, 3, 8), Conv(3, 8, 8), Conv(3, 8, 16), Dense(16, 10)}}; }
ShapeSig SigB() { return {{Conv(5, 3, 8), Conv(5, 8, 8), Conv(3, 8, 16), Dense(16, 10)}}; }

TEST(Put, EmptyStoreStores) {
  ParamStore store;
  auto r = store.Put(Blob(SigA(), 0.5, 'a'));
  ASSERT_TRUE(r.ok());
  EXPECT_TRUE(r->stored);
  EXPECT_FALSE(r->existing_perf.has_value());
}

TEST(Put, WorseBlobRejected) {
  ParamStore store;
  ASSERT_TRUE(store.Put(Blob(SigA(), 0.7, 'a')).ok());
  auto r = store.Put(Blob(SigA(), 0.6, 'b'));
  EXPECT_FALSE(r->stored);
  EXPECT_EQ(r->existing_perf, 0.7);
  EXPECT_EQ(store.GetExact(SigA())->payload[0], 'a');
}

TEST(Put, BetterBlobReplaces) {
  ParamStore store;
  ASSERT_TRUE(store.Put(Blob(SigA(), 0.7, 'a')).ok());
  auto r = store.Put(Blob(SigA(), 0.71, 'b'));
  EXPECT_TRUE(r->stored);
  EXPECT_EQ(store.GetExact(SigA())->payload[0], 'b');
  EXPECT_EQ(store.size(), 1u);
}

TEST(Put, MalformedRejected) {
  ParamStore store;
  ParamBlob short_blob = Blob(SigA(), 0.5, 'a');
  short_blob.payload.pop_back();
  EXPECT_EQ(store.Put(short_blob).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_FALSE(store.Put(Blob(SigA(), std::nan(""), 'a')).ok());
}

TEST(GetMatching, EmptyStoreIsNone) {
  ParamStore store;
  EXPECT_FALSE(store.GetMatching(SigA()).has_value());
}

TEST(GetMatching, ExactSignatureReturnsBlob) {
  ParamStore store;
  ASSERT_TRUE(store.Put(Blob(SigA(), 0.6, 'a')).ok());
  auto m = store.GetMatching(SigA());
  ASSERT_TRUE(m.has_value());
  EXPECT_TRUE(m->exact);
  EXPECT_DOUBLE_EQ(m->Coverage(), 1.0);
  std::string joined;
  for (const auto& l : m->layers) joined += l.bytes;
  EXPECT_EQ(joined, store.GetExact(SigA())->payload);
}

TEST(GetMatching, SharedThirdLayerFromBetterBlob) {
  ParamStore store;
  ASSERT_TRUE(store.Put(Blob(SigA(), 0.6, 'a', 1)).ok());
  ASSERT_TRUE(store.Put(Blob(SigB(), 0.8, 'b', 2)).ok());
  ShapeSig query{{Conv(7, 3, 8), Conv(7, 8, 8), Conv(3, 8, 16), Dense(16, 10)}};
  auto m = store.GetMatching(query);
  ASSERT_TRUE(m.has_value());
  EXPECT_FALSE(m->exact);
  ASSERT_EQ(m->layers.size(), 2u);
  EXPECT_EQ(m->layers[0].layer, 2u);
  EXPECT_EQ(m->layers[0].bytes, std::string(8 * 3 * 3 * 8 * 16, 'b'));
  EXPECT_EQ(m->layers[0].source, 2);
  EXPECT_EQ(m->PrimarySource(), 2);
}

// Enumeration oracle: every query layer comes from the highest-perf blob that
// holds an identical descriptor anywhere in its signature.
TEST(GetMatching, AgreesWithEnumerationOracle) {
  const std::vector<LayerDesc> pool = {Conv(3, 3, 4), Conv(3, 4, 4), Conv(5, 4, 4),
                                       Conv(3, 4, 8), Dense(4, 10), Dense(8, 10),
                                       {"bn", {4}}, {"bn", {8}}};
  Rng rng(17);
  for (int round = 0; round < 50; ++round) {
    ParamStore store;
    std::vector<ParamBlob> held;
    std::uniform_int_distribution<int> len(1, 4), pick(0, pool.size() - 1);
    for (int b = 0; b < 6; ++b) {
      ShapeSig s;
      for (int i = len(rng); i > 0; --i) s.layers.push_back(pool[pick(rng)]);
      // Distinct perfs keep the oracle free of ties.
      ParamBlob blob = Blob(s, 0.1 + 0.1 * b + 0.001 * round, static_cast<char>('a' + b), b);
      auto r = store.Put(blob);
      ASSERT_TRUE(r.ok());
      if (!r->stored) continue;
      std::erase_if(held, [&](const ParamBlob& h) { return h.sig == s; });
      held.push_back(blob);
    }
    ShapeSig q;
    for (int i = len(rng); i > 0; --i) q.layers.push_back(pool[pick(rng)]);
    std::vector<std::pair<size_t, char>> expect;
    for (size_t i = 0; i < q.layers.size(); ++i) {
      const ParamBlob* best = nullptr;
      for (const auto& h : held) {
        bool has = false;
        for (const auto& l : h.sig.layers) has = has || l == q.layers[i];
        if (has && (best == nullptr || h.perf > best->perf)) best = &h;
      }
      if (best) expect.push_back({i, best->payload[0]});
    }
    auto m = store.GetMatching(q);
    if (expect.empty()) {
      EXPECT_FALSE(m.has_value());
      continue;
    }
    ASSERT_TRUE(m.has_value());
    ASSERT_EQ(m->layers.size(), expect.size());
    for (size_t k = 0; k < expect.size(); ++k) {
      EXPECT_EQ(m->layers[k].layer, expect[k].first);
      EXPECT_EQ(m->layers[k].bytes,
                std::string(8 * q.layers[expect[k].first].num_params(), expect[k].second));
    }
  }
}

TEST(ChooseInit, AlphaOneAlwaysRandom) {
  ParamStore store;
  ASSERT_TRUE(store.Put(Blob(SigA(), 0.6, 'a')).ok());
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) EXPECT_FALSE(store.ChooseInit(SigA(), 1.0, rng).warm);
}

TEST(ChooseInit, AlphaZeroAlwaysWarm) {
  ParamStore store;
  ASSERT_TRUE(store.Put(Blob(SigA(), 0.6, 'a')).ok());
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    auto c = store.ChooseInit(SigA(), 0.0, rng);
    EXPECT_TRUE(c.warm);
    EXPECT_TRUE(c.params.has_value());
  }
}

TEST(ChooseInit, NoMatchFallsBackToRandom) {
  ParamStore store;
  ASSERT_TRUE(store.Put(Blob(SigA(), 0.6, 'a')).ok());
  Rng rng(1);
  ShapeSig other{{{"lstm", {7, 7}}}};
  EXPECT_FALSE(store.ChooseInit(other, 0.0, rng).warm);
}

TEST(ChooseInit, WarmFractionConcentrates) {
  ParamStore store;
  ASSERT_TRUE(store.Put(Blob(SigA(), 0.6, 'a')).ok());
  Rng rng(2026);
  int warm = 0;
  for (int i = 0; i < 10000; ++i) warm += store.ChooseInit(SigA(), 0.3, rng).warm;
  EXPECT_NEAR(warm / 10000.0, 0.7, 0.02);
}

TEST(AlphaSchedule, StartsAtAlpha0) {
  AlphaSchedule s;
  EXPECT_DOUBLE_EQ(s.At(0), s.alpha0);
}

TEST(AlphaSchedule, ExponentialClosedForm) {
  AlphaSchedule s;
  s.alpha0 = 1.0;
  s.rate = 0.9;
  EXPECT_NEAR(s.At(10), std::pow(0.9, 10), 1e-12);
  EXPECT_NEAR(s.At(10), 0.3487, 5e-5);
}

TEST(AlphaSchedule, LinearClampsAtFloor) {
  AlphaSchedule s;
  s.kind = AlphaSchedule::Kind::kLinear;
  s.alpha0 = 0.5;
  s.step = 0.1;
  s.floor = 0.05;
  EXPECT_DOUBLE_EQ(s.At(100), 0.05);
  double prev = s.At(0);
  for (int t = 1; t < 20; ++t) {
    EXPECT_LE(s.At(t), prev);
    prev = s.At(t);
  }
}

TEST(Persistence, SaveLoadRoundTrip) {
  const std::string path = ::testing::TempDir() + "rafiki_store.bin";
  ParamStore a("study-1");
  ASSERT_TRUE(a.Put(Blob(SigA(), 0.6, 'a', 4)).ok());
  ASSERT_TRUE(a.Put(Blob(SigB(), 0.7, 'b', 9)).ok());
  ASSERT_TRUE(a.Save(path).ok());

  ParamStore same("study-1");
  ASSERT_TRUE(same.Load(path).ok());
  EXPECT_EQ(same.GetExact(SigA()), a.GetExact(SigA()));
  EXPECT_EQ(same.GetExact(SigB()), a.GetExact(SigB()));

  ParamStore other("study-2");
  ASSERT_TRUE(other.Load(path).ok());
  EXPECT_EQ(other.size(), 0u);
  ASSERT_TRUE(other.Load(path, /*cross_study=*/true).ok());
  EXPECT_EQ(other.size(), 2u);
  std::remove(path.c_str());
}

}  // namespace
}  // namespace rafiki
