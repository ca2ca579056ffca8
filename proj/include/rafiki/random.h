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

#ifndef RAFIKI_RANDOM_H_
#define RAFIKI_RANDOM_H_

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <string_view>

namespace rafiki {

// Engine used everywhere a stream of draws is needed.
using Rng = std::mt19937_64;

// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr uint64_t Mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr uint64_t HashName(std::string_view name) {
  uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : name) {
    h ^= static_cast<uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Root-seed splitting. Every component owns the stream
//   seed(component, index) = Mix64(Mix64(root ^ HashName(component)) + index)
// so adding a component never perturbs the draws of another one.
constexpr uint64_t DeriveSeed(uint64_t root, std::string_view component,
                              uint64_t index = 0) {
  return Mix64(Mix64(root ^ HashName(component)) + index);
}

inline Rng MakeRng(uint64_t root, std::string_view component,
                   uint64_t index = 0) {
  return Rng(DeriveSeed(root, component, index));
}

// Counter-based draws: a pure function of (seed, counters). Used where the
// value must not depend on the order in which simulated entities run.
inline uint64_t CounterHash(uint64_t seed, std::initializer_list<uint64_t> ctr) {
  uint64_t h = Mix64(seed);
  for (uint64_t c : ctr) h = Mix64(h ^ Mix64(c + 0x632be59bd9b4e019ULL));
  return h;
}

// Uniform in (0, 1).
inline double CounterUniform(uint64_t seed, std::initializer_list<uint64_t> ctr) {
  return (static_cast<double>(CounterHash(seed, ctr) >> 11) + 0.5) * 0x1.0p-53;
}

// Standard normal via Box-Muller on two counter draws.
inline double CounterNormal(uint64_t seed, uint64_t a, uint64_t b) {
  const double u1 = CounterUniform(seed, {a, b, 1});
  const double u2 = CounterUniform(seed, {a, b, 2});
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace rafiki

#endif  // RAFIKI_RANDOM_H_
