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

// Master/worker protocol messages and their frame codec.
//
// A frame is a 4-byte little-endian payload length followed by one UTF-8
// JSON object. Worker-to-master messages carry "type" (kRequest, kReport,
// kFinish), "worker", and for kReport "p" and "trial". Master-to-worker
// directives carry "target", "kind" (SendTrial, kPut, kStop, Shutdown) and,
// for SendTrial, "trial". Unknown fields are rejected.

#ifndef RAFIKI_WIRE_H_
#define RAFIKI_WIRE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "rafiki/advisor.h"
#include "rafiki/hyperspace.h"

namespace rafiki {

enum class MsgType { kRequest, kReport, kFinish };

struct WireMessage {
  MsgType type = MsgType::kRequest;
  WorkerId worker = -1;
  std::optional<double> p;
  std::optional<Trial> trial;

  static WireMessage Request(WorkerId w) { return {MsgType::kRequest, w, {}, {}}; }
  static WireMessage Report(WorkerId w, double p, Trial t) {
    return {MsgType::kReport, w, p, std::move(t)};
  }
  static WireMessage Finish(WorkerId w) { return {MsgType::kFinish, w, {}, {}}; }

  bool operator==(const WireMessage&) const = default;
};

enum class DirectiveKind { kSendTrial, kPut, kStop, kShutdown };

struct MasterDirective {
  WorkerId target = -1;
  DirectiveKind kind = DirectiveKind::kShutdown;
  std::optional<Trial> trial;  // SendTrial only

  static MasterDirective SendTrial(WorkerId w, Trial t) {
    return {w, DirectiveKind::kSendTrial, std::move(t)};
  }
  static MasterDirective Put(WorkerId w) { return {w, DirectiveKind::kPut, {}}; }
  static MasterDirective Stop(WorkerId w) { return {w, DirectiveKind::kStop, {}}; }
  static MasterDirective Shutdown(WorkerId w) {
    return {w, DirectiveKind::kShutdown, {}};
  }

  bool operator==(const MasterDirective&) const = default;
};

using Frame = std::variant<WireMessage, MasterDirective>;

std::string_view MsgTypeName(MsgType type);
std::string_view DirectiveKindName(DirectiveKind kind);

// Checks the per-type field invariants (kReport carries p and trial, kRequest
// and kFinish carry neither). ProtocolViolation (InvalidArgument) otherwise.
absl::Status ValidateMessage(const WireMessage& msg);

nlohmann::json TrialToJson(const Trial& trial);
absl::StatusOr<Trial> TrialFromJson(const nlohmann::json& j);
nlohmann::json AssignmentToJson(const Assignment& assignment);
absl::StatusOr<Assignment> AssignmentFromJson(const nlohmann::json& j);

nlohmann::json FrameToJson(const Frame& frame);
absl::StatusOr<Frame> FrameFromJson(const nlohmann::json& j);

inline constexpr uint32_t kMaxFramePayload = 16u << 20;

std::string EncodeFrame(const Frame& frame);

// Decodes exactly one frame occupying all of `bytes`. Failures are
// CodecError (DataLoss) with the byte offset of the problem in the message.
absl::StatusOr<Frame> DecodeFrame(std::string_view bytes);

// Incremental decoder for byte streams; never yields a partial frame.
class FrameReader {
 public:
  void Append(std::string_view bytes) { buffer_.append(bytes); }
  // nullopt when no complete frame is buffered yet.
  absl::StatusOr<std::optional<Frame>> Next();
  size_t buffered() const { return buffer_.size(); }

 private:
  std::string buffer_;
  uint64_t consumed_ = 0;
};

}  // namespace rafiki

#endif  // RAFIKI_WIRE_H_
