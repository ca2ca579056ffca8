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

#include "rafiki/wire.h"

#include <cmath>
#include <limits>
#include <set>

#include "absl/strings/str_cat.h"

namespace rafiki {

using nlohmann::json;

namespace {

absl::Status CodecError(uint64_t offset, std::string_view what) {
  return absl::DataLossError(absl::StrCat("CodecError at offset ", offset, ": ", std::string(what)));
}

absl::Status CheckFields(const json& j, const std::set<std::string>& allowed,
                         std::string_view where) {
  if (!j.is_object()) {
    return absl::InvalidArgumentError(absl::StrCat(std::string(where), " is not an object"));
  }
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) {
      return absl::InvalidArgumentError(
          absl::StrCat("unknown field '", key, "' in ", std::string(where)));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<WorkerId> ReadWorker(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number_integer()) {
    return absl::InvalidArgumentError(absl::StrCat("'", key, "' must be an integer"));
  }
  const int64_t w = it->get<int64_t>();
  if (w < std::numeric_limits<WorkerId>::min() ||
      w > std::numeric_limits<WorkerId>::max()) {
    return absl::InvalidArgumentError(absl::StrCat("'", key, "' out of range"));
  }
  return static_cast<WorkerId>(w);
}

}  // namespace

std::string_view MsgTypeName(MsgType type) {
  switch (type) {
    case MsgType::kRequest:
      return "kRequest";
    case MsgType::kReport:
      return "kReport";
    case MsgType::kFinish:
      return "kFinish";
  }
  return "?";
}

std::string_view DirectiveKindName(DirectiveKind kind) {
  switch (kind) {
    case DirectiveKind::kSendTrial:
      return "SendTrial";
    case DirectiveKind::kPut:
      return "kPut";
    case DirectiveKind::kStop:
      return "kStop";
    case DirectiveKind::kShutdown:
      return "Shutdown";
  }
  return "?";
}

absl::Status ValidateMessage(const WireMessage& msg) {
  const bool has_p = msg.p.has_value();
  const bool has_trial = msg.trial.has_value();
  switch (msg.type) {
    case MsgType::kReport:
      if (!has_p || !has_trial) {
        return absl::InvalidArgumentError(absl::StrCat(
            "ProtocolViolation: kReport from worker ", msg.worker,
            " must carry p and trial"));
      }
      if (!std::isfinite(*msg.p)) {
        return absl::InvalidArgumentError(absl::StrCat(
            "ProtocolViolation: kReport from worker ", msg.worker,
            " has non-finite p"));
      }
      break;
    case MsgType::kRequest:
    case MsgType::kFinish:
      if (has_p || has_trial) {
        return absl::InvalidArgumentError(absl::StrCat(
            "ProtocolViolation: ", std::string(MsgTypeName(msg.type)), " from worker ",
            msg.worker, " must not carry p or trial"));
      }
      break;
  }
  return absl::OkStatus();
}

json AssignmentToJson(const Assignment& assignment) {
  json j = json::object();
  for (const auto& [name, value] : assignment) {
    std::visit([&](const auto& v) { j[name] = v; }, value);
  }
  return j;
}

absl::StatusOr<Assignment> AssignmentFromJson(const json& j) {
  if (!j.is_object()) return absl::InvalidArgumentError("assignment is not an object");
  Assignment out;
  for (const auto& [name, value] : j.items()) {
    if (value.is_number_integer()) {
      out[name] = value.get<int64_t>();
    } else if (value.is_number_float()) {
      out[name] = value.get<double>();
    } else if (value.is_string()) {
      out[name] = value.get<std::string>();
    } else {
      return absl::InvalidArgumentError(
          absl::StrCat("assignment value for '", name, "' has unsupported type"));
    }
  }
  return out;
}

json TrialToJson(const Trial& trial) {
  json origin = {{"kind", trial.origin.kind == TrialOrigin::Kind::kWarm
                              ? "Warm"
                              : "RandomInit"}};
  if (trial.origin.kind == TrialOrigin::Kind::kWarm) {
    origin["source"] = trial.origin.source;
  }
  return json{{"trial_id", trial.trial_id},
              {"assignment", AssignmentToJson(trial.assignment)},
              {"origin", origin}};
}

absl::StatusOr<Trial> TrialFromJson(const json& j) {
  if (auto s = CheckFields(j, {"trial_id", "assignment", "origin"}, "trial"); !s.ok()) {
    return s;
  }
  Trial trial;
  auto id = j.find("trial_id");
  if (id == j.end() || !id->is_number_integer()) {
    return absl::InvalidArgumentError("trial.trial_id must be an integer");
  }
  trial.trial_id = id->get<int64_t>();
  auto a = j.find("assignment");
  if (a == j.end()) return absl::InvalidArgumentError("trial.assignment missing");
  auto assignment = AssignmentFromJson(*a);
  if (!assignment.ok()) return assignment.status();
  trial.assignment = *std::move(assignment);
  if (auto o = j.find("origin"); o != j.end()) {
    if (auto s = CheckFields(*o, {"kind", "source"}, "trial.origin"); !s.ok()) return s;
    auto kind = o->find("kind");
    if (kind == o->end() || !kind->is_string()) {
      return absl::InvalidArgumentError("trial.origin.kind must be a string");
    }
    if (*kind == "RandomInit") {
      if (o->contains("source")) {
        return absl::InvalidArgumentError("RandomInit origin has no source");
      }
      trial.origin = TrialOrigin::Random();
    } else if (*kind == "Warm") {
      auto src = o->find("source");
      if (src == o->end() || !src->is_number_integer()) {
        return absl::InvalidArgumentError("Warm origin needs an integer source");
      }
      trial.origin = TrialOrigin::Warm(src->get<int64_t>());
    } else {
      return absl::InvalidArgumentError("unknown trial.origin.kind");
    }
  }
  return trial;
}

json FrameToJson(const Frame& frame) {
  if (const auto* msg = std::get_if<WireMessage>(&frame)) {
    json j = {{"type", MsgTypeName(msg->type)}, {"worker", msg->worker}};
    if (msg->p) j["p"] = *msg->p;
    if (msg->trial) j["trial"] = TrialToJson(*msg->trial);
    return j;
  }
  const auto& d = std::get<MasterDirective>(frame);
  json j = {{"target", d.target}, {"kind", DirectiveKindName(d.kind)}};
  if (d.trial) j["trial"] = TrialToJson(*d.trial);
  return j;
}

absl::StatusOr<Frame> FrameFromJson(const json& j) {
  if (!j.is_object()) return absl::InvalidArgumentError("frame is not an object");
  if (j.contains("type")) {
    if (auto s = CheckFields(j, {"type", "worker", "p", "trial"}, "message"); !s.ok()) {
      return s;
    }
    WireMessage msg;
    const json& type = j["type"];
    if (type == "kRequest") {
      msg.type = MsgType::kRequest;
    } else if (type == "kReport") {
      msg.type = MsgType::kReport;
    } else if (type == "kFinish") {
      msg.type = MsgType::kFinish;
    } else {
      return absl::InvalidArgumentError("unknown message type");
    }
    auto w = ReadWorker(j, "worker");
    if (!w.ok()) return w.status();
    msg.worker = *w;
    if (auto p = j.find("p"); p != j.end()) {
      if (!p->is_number()) return absl::InvalidArgumentError("'p' must be a number");
      msg.p = p->get<double>();
    }
    if (auto t = j.find("trial"); t != j.end()) {
      auto trial = TrialFromJson(*t);
      if (!trial.ok()) return trial.status();
      msg.trial = *std::move(trial);
    }
    return Frame(std::move(msg));
  }
  if (auto s = CheckFields(j, {"target", "kind", "trial"}, "directive"); !s.ok()) {
    return s;
  }
  MasterDirective d;
  auto w = ReadWorker(j, "target");
  if (!w.ok()) return w.status();
  d.target = *w;
  auto kind = j.find("kind");
  if (kind == j.end() || !kind->is_string()) {
    return absl::InvalidArgumentError("directive kind must be a string");
  }
  if (*kind == "SendTrial") {
    d.kind = DirectiveKind::kSendTrial;
  } else if (*kind == "kPut") {
    d.kind = DirectiveKind::kPut;
  } else if (*kind == "kStop") {
    d.kind = DirectiveKind::kStop;
  } else if (*kind == "Shutdown") {
    d.kind = DirectiveKind::kShutdown;
  } else {
    return absl::InvalidArgumentError("unknown directive kind");
  }
  if (auto t = j.find("trial"); t != j.end()) {
    auto trial = TrialFromJson(*t);
    if (!trial.ok()) return trial.status();
    d.trial = *std::move(trial);
  }
  if ((d.kind == DirectiveKind::kSendTrial) != d.trial.has_value()) {
    return absl::InvalidArgumentError("trial present iff kind is SendTrial");
  }
  return Frame(std::move(d));
}

std::string EncodeFrame(const Frame& frame) {
  const std::string payload = FrameToJson(frame).dump();
  const auto n = static_cast<uint32_t>(payload.size());
  std::string out(4, '\0');
  for (int i = 0; i < 4; ++i) out[i] = static_cast<char>((n >> (8 * i)) & 0xff);
  out += payload;
  return out;
}

namespace {

absl::StatusOr<Frame> DecodePayload(std::string_view payload, uint64_t base) {
  json j;
  try {
    j = json::parse(payload.begin(), payload.end());
  } catch (const json::parse_error& e) {
    return CodecError(base + (e.byte > 0 ? e.byte - 1 : 0), e.what());
  }
  absl::StatusOr<Frame> frame;
  try {
    frame = FrameFromJson(j);
  } catch (const json::exception& e) {
    return CodecError(base, e.what());
  }
  if (!frame.ok()) return CodecError(base, std::string(frame.status().message()));
  return frame;
}

uint32_t ReadLength(std::string_view bytes) {
  uint32_t n = 0;
  for (int i = 0; i < 4; ++i) {
    n |= static_cast<uint32_t>(static_cast<uint8_t>(bytes[i])) << (8 * i);
  }
  return n;
}

}  // namespace

absl::StatusOr<Frame> DecodeFrame(std::string_view bytes) {
  if (bytes.size() < 4) return CodecError(bytes.size(), "truncated length prefix");
  const uint32_t n = ReadLength(bytes);
  if (n > kMaxFramePayload) return CodecError(0, "frame length exceeds limit");
  if (bytes.size() - 4 < n) return CodecError(bytes.size(), "truncated payload");
  if (bytes.size() - 4 > n) return CodecError(4 + n, "trailing bytes after frame");
  return DecodePayload(bytes.substr(4), 4);
}

absl::StatusOr<std::optional<Frame>> FrameReader::Next() {
  if (buffer_.size() < 4) return std::optional<Frame>();
  const uint32_t n = ReadLength(buffer_);
  if (n > kMaxFramePayload) return CodecError(consumed_, "frame length exceeds limit");
  if (buffer_.size() - 4 < n) return std::optional<Frame>();
  auto frame = DecodePayload(std::string_view(buffer_).substr(4, n), consumed_ + 4);
  buffer_.erase(0, 4 + n);
  consumed_ += 4 + n;
  if (!frame.ok()) return frame.status();
  return std::optional<Frame>(*std::move(frame));
}

}  // namespace rafiki
