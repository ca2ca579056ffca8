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

// Parameter store for checkpointed trial weights.
//
// Blobs are keyed by their shape signature. A put replaces the stored blob
// only when it performs strictly better. Reads match layer by layer: each
// layer of the query is served by the best-performing blob that contains an
// identical (kind, dims) layer.
//
// All methods are thread-safe.
//
// On-disk records are a u32 little-endian length followed by a JSON object
//   {"ns", "sig": [[kind, [dims...]], ...], "perf", "source", "payload"(hex)}

#ifndef RAFIKI_PARAM_STORE_H_
#define RAFIKI_PARAM_STORE_H_

#include <compare>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "rafiki/random.h"

namespace rafiki {

struct LayerDesc {
  std::string kind;
  std::vector<int64_t> dims;

  int64_t num_params() const;
  auto operator<=>(const LayerDesc&) const = default;
};

struct ShapeSig {
  std::vector<LayerDesc> layers;

  int64_t num_params() const;
  // Payload bytes implied by the signature: 8 per parameter.
  int64_t payload_bytes() const { return 8 * num_params(); }
  // Byte offset of layer i inside a payload.
  int64_t layer_offset(size_t i) const;
  std::string DebugString() const;
  auto operator<=>(const ShapeSig&) const = default;
};

struct ParamBlob {
  ShapeSig sig;
  std::string payload;
  double perf = 0.0;
  int64_t source = -1;  // trial id that produced the weights

  bool operator==(const ParamBlob&) const = default;
};

struct PutResult {
  bool stored = false;
  // Perf of the blob already holding the signature, if any.
  std::optional<double> existing_perf;
};

// Weights assembled for one query signature.
struct LayerMatch {
  size_t layer = 0;  // index in the query signature
  std::string bytes;
  double perf = 0.0;
  int64_t source = -1;
};

struct MatchedParams {
  ShapeSig query;
  std::vector<LayerMatch> layers;  // matched layers only, in query order
  bool exact = false;              // the whole signature is stored

  // Parameter-weighted perf over the matched layers.
  double DonorPerf() const;
  // Fraction of the query's parameters that were matched, in [0, 1].
  double Coverage() const;
  // Source trial of the highest-perf layer used.
  int64_t PrimarySource() const;
};

struct AlphaSchedule {
  enum class Kind { kExponential, kLinear };
  double alpha0 = 0.3;
  Kind kind = Kind::kExponential;
  double rate = 0.95;  // exponential factor per finished trial
  double step = 0.0;   // linear decrement per finished trial
  double floor = 0.05;

  double At(int64_t t) const;
};

absl::StatusOr<AlphaSchedule::Kind> ParseAlphaKind(std::string_view name);

struct InitChoice {
  bool warm = false;
  std::optional<MatchedParams> params;  // set iff warm
};

class ParamStore {
 public:
  explicit ParamStore(std::string ns = "default") : ns_(std::move(ns)) {}
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;

  // MalformedBlob (InvalidArgument) if the payload size disagrees with the
  // signature or perf is not finite.
  absl::StatusOr<PutResult> Put(ParamBlob blob);

  std::optional<ParamBlob> GetExact(const ShapeSig& sig) const;
  std::optional<MatchedParams> GetMatching(const ShapeSig& sig) const;

  // Random initialization with probability alpha or when nothing matches,
  // otherwise a warm start from GetMatching. Always consumes exactly one
  // uniform draw; the store is not consulted when the draw picks random.
  InitChoice ChooseInit(const ShapeSig& sig, double alpha, Rng& rng) const;

  // Highest perf over all stored blobs.
  std::optional<double> BestPerf() const;
  size_t size() const;
  const std::string& ns() const { return ns_; }

  // Writes every blob as one record, replacing the file.
  absl::Status Save(const std::string& path) const;
  // Replays the records of `path` through Put. Records of other namespaces
  // are skipped unless `cross_study` is set.
  absl::Status Load(const std::string& path, bool cross_study = false);

 private:
  std::optional<MatchedParams> GetMatchingLocked(const ShapeSig& sig) const;

  std::string ns_;
  mutable std::mutex mu_;
  std::map<ShapeSig, ParamBlob> blobs_;
};

// Deterministic simulated weights for (trial, epoch).
std::string SimulatedPayload(const ShapeSig& sig, int64_t trial_id,
                             int64_t epoch);

}  // namespace rafiki

#endif  // RAFIKI_PARAM_STORE_H_
