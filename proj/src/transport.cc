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

#include "rafiki/transport.h"

#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "absl/strings/str_cat.h"

namespace rafiki {

absl::Status TransportClosedError(std::string_view detail) {
  return absl::UnavailableError(absl::StrCat("TransportClosed: ", std::string(detail)));
}

bool IsTransportClosed(const absl::Status& status) {
  return status.code() == absl::StatusCode::kUnavailable;
}

absl::Status FramePipe::Push(std::string bytes) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (closed_) return TransportClosedError("pipe closed");
    queue_.push_back(std::move(bytes));
  }
  cv_.notify_one();
  return absl::OkStatus();
}

absl::StatusOr<std::string> FramePipe::Pop() {
  std::unique_lock<std::mutex> lock(mu_);
  cv_.wait(lock, [&] { return closed_ || !queue_.empty(); });
  if (queue_.empty()) return TransportClosedError("pipe closed");
  std::string out = std::move(queue_.front());
  queue_.pop_front();
  return out;
}

absl::StatusOr<std::optional<std::string>> FramePipe::TryPop() {
  std::lock_guard<std::mutex> lock(mu_);
  if (queue_.empty()) {
    if (closed_) return TransportClosedError("pipe closed");
    return std::optional<std::string>();
  }
  std::string out = std::move(queue_.front());
  queue_.pop_front();
  return std::optional<std::string>(std::move(out));
}

void FramePipe::Close() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

size_t FramePipe::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return queue_.size();
}

absl::Status InMemoryConnection::Send(const Frame& frame) {
  return out_->Push(EncodeFrame(frame));
}

absl::StatusOr<Frame> InMemoryConnection::Recv() {
  auto bytes = in_->Pop();
  if (!bytes.ok()) return bytes.status();
  return DecodeFrame(*bytes);
}

absl::StatusOr<std::optional<Frame>> InMemoryConnection::TryRecv() {
  auto bytes = in_->TryPop();
  if (!bytes.ok()) return bytes.status();
  if (!bytes->has_value()) return std::optional<Frame>();
  auto frame = DecodeFrame(**bytes);
  if (!frame.ok()) return frame.status();
  return std::optional<Frame>(*std::move(frame));
}

void InMemoryConnection::Close() {
  // Closing our outbound side signals EOF to the peer; the inbound side is
  // closed so a blocked local reader wakes up.
  out_->Close();
  in_->Close();
}

std::pair<std::unique_ptr<InMemoryConnection>, std::unique_ptr<InMemoryConnection>>
MakeInMemoryPair() {
  auto a_to_b = std::make_shared<FramePipe>();
  auto b_to_a = std::make_shared<FramePipe>();
  return {std::make_unique<InMemoryConnection>(b_to_a, a_to_b),
          std::make_unique<InMemoryConnection>(a_to_b, b_to_a)};
}

SocketConnection::~SocketConnection() { Close(); }

absl::Status SocketConnection::Send(const Frame& frame) {
  const std::string bytes = EncodeFrame(frame);
  std::lock_guard<std::mutex> lock(send_mu_);
  const int fd = fd_.load();
  if (fd < 0) return TransportClosedError("socket closed");
  size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n =
        ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return TransportClosedError(std::strerror(errno));
    }
    sent += static_cast<size_t>(n);
  }
  return absl::OkStatus();
}

absl::Status SocketConnection::Fill(bool block, bool* got_bytes) {
  char buf[4096];
  *got_bytes = false;
  while (true) {
    const int fd = fd_.load();
    if (fd < 0) return TransportClosedError("socket closed");
    const ssize_t n = ::recv(fd, buf, sizeof(buf), block ? 0 : MSG_DONTWAIT);
    if (n == 0) return TransportClosedError("peer closed the socket");
    if (n < 0) {
      if (errno == EINTR) continue;
      if (!block && (errno == EAGAIN || errno == EWOULDBLOCK)) {
        return absl::OkStatus();
      }
      return TransportClosedError(std::strerror(errno));
    }
    reader_.Append(std::string_view(buf, static_cast<size_t>(n)));
    *got_bytes = true;
    return absl::OkStatus();
  }
}

absl::StatusOr<Frame> SocketConnection::Recv() {
  while (true) {
    auto frame = reader_.Next();
    if (!frame.ok()) return frame.status();
    if (frame->has_value()) return **std::move(frame);
    bool got = false;
    if (auto s = Fill(/*block=*/true, &got); !s.ok()) return s;
  }
}

absl::StatusOr<std::optional<Frame>> SocketConnection::TryRecv() {
  while (true) {
    auto frame = reader_.Next();
    if (!frame.ok() || frame->has_value()) return frame;
    bool got = false;
    if (auto s = Fill(/*block=*/false, &got); !s.ok()) return s;
    if (!got) return std::optional<Frame>();
  }
}

void SocketConnection::Close() {
  std::lock_guard<std::mutex> lock(send_mu_);
  const int fd = fd_.exchange(-1);
  if (fd >= 0) {
    ::shutdown(fd, SHUT_RDWR);
    ::close(fd);
  }
}

namespace {

absl::StatusOr<sockaddr_un> MakeAddress(const std::string& path) {
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  if (path.size() >= sizeof(addr.sun_path)) {
    return absl::InvalidArgumentError(absl::StrCat("socket path too long: ", path));
  }
  std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
  return addr;
}

}  // namespace

absl::StatusOr<std::unique_ptr<SocketListener>> SocketListener::Listen(
    const std::string& path) {
  auto addr = MakeAddress(path);
  if (!addr.ok()) return addr.status();
  const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (fd < 0) return absl::InternalError(std::strerror(errno));
  ::unlink(path.c_str());
  if (::bind(fd, reinterpret_cast<const sockaddr*>(&*addr), sizeof(*addr)) != 0 ||
      ::listen(fd, 64) != 0) {
    const std::string err = std::strerror(errno);
    ::close(fd);
    return absl::InternalError(absl::StrCat("listen on ", path, ": ", err));
  }
  return std::unique_ptr<SocketListener>(new SocketListener(fd, path));
}

SocketListener::~SocketListener() {
  ::close(fd_);
  ::unlink(path_.c_str());
}

absl::StatusOr<std::unique_ptr<SocketConnection>> SocketListener::Accept() {
  while (true) {
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd >= 0) return std::make_unique<SocketConnection>(fd);
    if (errno != EINTR) return TransportClosedError(std::strerror(errno));
  }
}

absl::StatusOr<std::unique_ptr<SocketConnection>> ConnectSocket(
    const std::string& path) {
  auto addr = MakeAddress(path);
  if (!addr.ok()) return addr.status();
  const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (fd < 0) return absl::InternalError(std::strerror(errno));
  if (::connect(fd, reinterpret_cast<const sockaddr*>(&*addr), sizeof(*addr)) != 0) {
    const std::string err = std::strerror(errno);
    ::close(fd);
    return TransportClosedError(absl::StrCat("connect to ", path, ": ", err));
  }
  return std::make_unique<SocketConnection>(fd);
}

MasterHub::MasterHub() : start_(std::chrono::steady_clock::now()) {}

MasterHub::~MasterHub() { CloseAll(); }

double MasterHub::Now() const {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
      .count();
}

void MasterHub::Attach(std::unique_ptr<Connection> conn) {
  std::lock_guard<std::mutex> lock(mu_);
  auto peer = std::make_unique<Peer>();
  peer->conn = std::move(conn);
  const size_t index = peers_.size();
  peers_.push_back(std::move(peer));
  ++open_;
  peers_[index]->reader = std::thread([this, index] { ReaderLoop(index); });
}

void MasterHub::ReaderLoop(size_t index) {
  Connection* conn;
  {
    std::lock_guard<std::mutex> lock(mu_);
    conn = peers_[index]->conn.get();
  }
  while (true) {
    auto frame = conn->Recv();
    std::lock_guard<std::mutex> lock(mu_);
    if (!frame.ok()) {
      if (!IsTransportClosed(frame.status()) && error_.ok()) error_ = frame.status();
      --open_;
      cv_.notify_all();
      return;
    }
    if (auto* msg = std::get_if<WireMessage>(&*frame)) {
      routes_.emplace(msg->worker, index);
      inbox_.push_back(std::move(*msg));
      cv_.notify_all();
    }
  }
}

absl::StatusOr<WireMessage> MasterHub::Recv() {
  std::unique_lock<std::mutex> lock(mu_);
  cv_.wait(lock, [&] { return !inbox_.empty() || open_ == 0 || !error_.ok(); });
  if (!inbox_.empty()) {
    WireMessage msg = std::move(inbox_.front());
    inbox_.pop_front();
    return msg;
  }
  if (!error_.ok()) return error_;
  return TransportClosedError("all workers disconnected");
}

absl::Status MasterHub::Send(const MasterDirective& directive) {
  Connection* conn = nullptr;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = routes_.find(directive.target);
    if (it == routes_.end()) {
      return absl::NotFoundError(
          absl::StrCat("no connection for worker ", directive.target));
    }
    conn = peers_[it->second]->conn.get();
  }
  return conn->Send(directive);
}

void MasterHub::CloseAll() {
  std::vector<std::thread> readers;
  {
    std::lock_guard<std::mutex> lock(mu_);
    for (auto& peer : peers_) peer->conn->Close();
    for (auto& peer : peers_) {
      if (peer->reader.joinable()) readers.push_back(std::move(peer->reader));
    }
  }
  for (auto& t : readers) t.join();
}

size_t MasterHub::attached() const {
  std::lock_guard<std::mutex> lock(mu_);
  return peers_.size();
}

}  // namespace rafiki
