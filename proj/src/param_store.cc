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

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "absl/strings/escaping.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"

namespace rafiki {

using nlohmann::json;

int64_t LayerDesc::num_params() const {
  int64_t n = 1;
  for (int64_t d : dims) n *= d;
  return n;
}

int64_t ShapeSig::num_params() const {
  int64_t n = 0;
  for (const auto& l : layers) n += l.num_params();
  return n;
}

int64_t ShapeSig::layer_offset(size_t i) const {
  int64_t off = 0;
  for (size_t j = 0; j < i; ++j) off += 8 * layers[j].num_params();
  return off;
}

std::string ShapeSig::DebugString() const {
  std::vector<std::string> parts;
  for (const auto& l : layers) {
    parts.push_back(absl::StrCat(l.kind, "(", absl::StrJoin(l.dims, "x"), ")"));
  }
  return absl::StrJoin(parts, ",");
}

double MatchedParams::DonorPerf() const {
  double acc = 0.0, n = 0.0;
  for (const auto& m : layers) {
    const auto k = static_cast<double>(query.layers[m.layer].num_params());
    acc += m.perf * k;
    n += k;
  }
  return n > 0.0 ? acc / n : 0.0;
}

double MatchedParams::Coverage() const {
  const int64_t total = query.num_params();
  if (total == 0) return 0.0;
  int64_t n = 0;
  for (const auto& m : layers) n += query.layers[m.layer].num_params();
  return static_cast<double>(n) / static_cast<double>(total);
}

int64_t MatchedParams::PrimarySource() const {
  const LayerMatch* best = nullptr;
  for (const auto& m : layers) {
    if (best == nullptr || m.perf > best->perf) best = &m;
  }
  return best == nullptr ? -1 : best->source;
}

double AlphaSchedule::At(int64_t t) const {
  const double raw = kind == Kind::kExponential
                         ? alpha0 * std::pow(rate, static_cast<double>(t))
                         : alpha0 - step * static_cast<double>(t);
  return std::clamp(raw, std::min(floor, alpha0), alpha0);
}

absl::StatusOr<AlphaSchedule::Kind> ParseAlphaKind(std::string_view name) {
  if (name == "exponential") return AlphaSchedule::Kind::kExponential;
  if (name == "linear") return AlphaSchedule::Kind::kLinear;
  return absl::InvalidArgumentError(absl::StrCat(
      "alpha schedule must be exponential or linear, got ", std::string(name)));
}

absl::StatusOr<PutResult> ParamStore::Put(ParamBlob blob) {
  if (static_cast<int64_t>(blob.payload.size()) != blob.sig.payload_bytes()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "MalformedBlob: payload has ", blob.payload.size(), " bytes, signature ",
        blob.sig.DebugString(), " needs ", blob.sig.payload_bytes()));
  }
  if (!std::isfinite(blob.perf)) {
    return absl::InvalidArgumentError("MalformedBlob: non-finite perf");
  }
  std::lock_guard<std::mutex> lock(mu_);
  auto it = blobs_.find(blob.sig);
  if (it == blobs_.end()) {
    ShapeSig key = blob.sig;
    blobs_.emplace(std::move(key), std::move(blob));
    return PutResult{true, std::nullopt};
  }
  const double existing = it->second.perf;
  if (blob.perf > existing) {
    it->second = std::move(blob);
    return PutResult{true, existing};
  }
  return PutResult{false, existing};
}

std::optional<ParamBlob> ParamStore::GetExact(const ShapeSig& sig) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = blobs_.find(sig);
  if (it == blobs_.end()) return std::nullopt;
  return it->second;
}

std::optional<MatchedParams> ParamStore::GetMatching(const ShapeSig& sig) const {
  std::lock_guard<std::mutex> lock(mu_);
  return GetMatchingLocked(sig);
}

std::optional<MatchedParams> ParamStore::GetMatchingLocked(
    const ShapeSig& sig) const {
  MatchedParams out;
  out.query = sig;
  out.exact = blobs_.contains(sig);
  for (size_t i = 0; i < sig.layers.size(); ++i) {
    const ParamBlob* best = nullptr;
    size_t best_layer = 0;
    for (const auto& [key, blob] : blobs_) {
      const auto& layers = blob.sig.layers;
      // Prefer the same position, else the first identical layer.
      std::optional<size_t> hit;
      if (i < layers.size() && layers[i] == sig.layers[i]) {
        hit = i;
      } else {
        auto f = std::find(layers.begin(), layers.end(), sig.layers[i]);
        if (f != layers.end()) hit = static_cast<size_t>(f - layers.begin());
      }
      if (!hit) continue;
      if (best == nullptr || blob.perf > best->perf) {
        best = &blob;
        best_layer = *hit;
      }
    }
    if (best == nullptr) continue;
    const int64_t off = best->sig.layer_offset(best_layer);
    const int64_t len = 8 * sig.layers[i].num_params();
    out.layers.push_back(
        LayerMatch{i, best->payload.substr(off, len), best->perf, best->source});
  }
  if (out.layers.empty()) return std::nullopt;
  return out;
}

InitChoice ParamStore::ChooseInit(const ShapeSig& sig, double alpha,
                                  Rng& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < alpha) return {};
  auto match = GetMatching(sig);
  if (!match) return {};
  return InitChoice{true, std::move(match)};
}

size_t ParamStore::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return blobs_.size();
}

std::optional<double> ParamStore::BestPerf() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::optional<double> best;
  for (const auto& [key, blob] : blobs_) {
    if (!best || blob.perf > *best) best = blob.perf;
  }
  return best;
}

namespace {

json SigToJson(const ShapeSig& sig) {
  json j = json::array();
  for (const auto& l : sig.layers) j.push_back(json::array({l.kind, l.dims}));
  return j;
}

absl::StatusOr<ShapeSig> SigFromJson(const json& j) {
  if (!j.is_array()) return absl::DataLossError("sig is not an array");
  ShapeSig sig;
  for (const auto& l : j) {
    if (!l.is_array() || l.size() != 2 || !l[0].is_string() || !l[1].is_array()) {
      return absl::DataLossError("bad layer descriptor");
    }
    sig.layers.push_back(LayerDesc{l[0].get<std::string>(),
                                   l[1].get<std::vector<int64_t>>()});
  }
  return sig;
}

}  // namespace

absl::Status ParamStore::Save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return absl::InternalError(absl::StrCat("cannot write ", path));
  std::lock_guard<std::mutex> lock(mu_);
  for (const auto& [key, blob] : blobs_) {
    const std::string rec = json{{"ns", ns_},
                                 {"sig", SigToJson(blob.sig)},
                                 {"perf", blob.perf},
                                 {"source", blob.source},
                                 {"payload", absl::BytesToHexString(blob.payload)}}
                                .dump();
    const auto n = static_cast<uint32_t>(rec.size());
    char len[4];
    for (int i = 0; i < 4; ++i) len[i] = static_cast<char>((n >> (8 * i)) & 0xff);
    out.write(len, 4);
    out.write(rec.data(), static_cast<std::streamsize>(rec.size()));
  }
  return out ? absl::OkStatus() : absl::InternalError("write failed");
}

absl::Status ParamStore::Load(const std::string& path, bool cross_study) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot read ", path));
  const std::string data((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  size_t pos = 0;
  while (pos < data.size()) {
    if (data.size() - pos < 4) {
      return absl::DataLossError(absl::StrCat("truncated record at ", pos));
    }
    uint32_t n = 0;
    for (int i = 0; i < 4; ++i) {
      n |= static_cast<uint32_t>(static_cast<uint8_t>(data[pos + i])) << (8 * i);
    }
    if (data.size() - pos - 4 < n) {
      return absl::DataLossError(absl::StrCat("truncated record at ", pos));
    }
    json j = json::parse(data.begin() + pos + 4, data.begin() + pos + 4 + n,
                         nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      return absl::DataLossError(absl::StrCat("bad record at ", pos));
    }
    pos += 4 + n;
    if (!cross_study && j.value("ns", "") != ns_) continue;
    auto sig = SigFromJson(j["sig"]);
    if (!sig.ok()) return sig.status();
    ParamBlob blob{*std::move(sig),
                   absl::HexStringToBytes(j.value("payload", "")),
                   j.value("perf", 0.0), j.value("source", int64_t{-1})};
    if (auto r = Put(std::move(blob)); !r.ok()) return r.status();
  }
  return absl::OkStatus();
}

std::string SimulatedPayload(const ShapeSig& sig, int64_t trial_id,
                             int64_t epoch) {
  const int64_t n = sig.num_params();
  std::string out(static_cast<size_t>(8 * n), '\0');
  const uint64_t seed = CounterHash(0x5eed, {static_cast<uint64_t>(trial_id),
                                             static_cast<uint64_t>(epoch)});
  for (int64_t i = 0; i < n; ++i) {
    const double w = 0.1 * (CounterUniform(seed, {static_cast<uint64_t>(i)}) - 0.5);
    std::memcpy(out.data() + 8 * i, &w, 8);
  }
  return out;
}

}  // namespace rafiki
