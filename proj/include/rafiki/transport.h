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

// Frame transports between the study master and its workers.
//
// Two implementations share the frame codec in wire.h: an in-memory duplex
// pipe and a Unix-domain stream socket. Both deliver frames reliably and in
// per-peer FIFO order; a closed peer surfaces as TransportClosed
// (absl::StatusCode::kUnavailable).

#ifndef RAFIKI_TRANSPORT_H_
#define RAFIKI_TRANSPORT_H_

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "rafiki/wire.h"

namespace rafiki {

absl::Status TransportClosedError(std::string_view detail);
bool IsTransportClosed(const absl::Status& status);

// One endpoint of a bidirectional frame stream. Safe for one producer and one
// consumer per direction.
class Connection {
 public:
  virtual ~Connection() = default;
  virtual absl::Status Send(const Frame& frame) = 0;
  // Blocks until a frame arrives or the peer closes.
  virtual absl::StatusOr<Frame> Recv() = 0;
  // Non-blocking: nullopt when no complete frame is available yet.
  virtual absl::StatusOr<std::optional<Frame>> TryRecv() = 0;
  virtual void Close() = 0;
};

// The master's view of its workers: one totally ordered inbound stream and
// addressed outbound directives.
class MasterEndpoint {
 public:
  virtual ~MasterEndpoint() = default;
  virtual absl::StatusOr<WireMessage> Recv() = 0;
  virtual absl::Status Send(const MasterDirective& directive) = 0;
  // Seconds since the study started, on the endpoint's clock.
  virtual double Now() const = 0;
};

// Byte queue carrying encoded frames in one direction.
class FramePipe {
 public:
  absl::Status Push(std::string bytes);
  // Blocks; TransportClosed once closed and drained.
  absl::StatusOr<std::string> Pop();
  // Non-blocking variant: nullopt when empty but still open.
  absl::StatusOr<std::optional<std::string>> TryPop();
  void Close();
  size_t size() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::string> queue_;
  bool closed_ = false;
};

class InMemoryConnection : public Connection {
 public:
  InMemoryConnection(std::shared_ptr<FramePipe> in, std::shared_ptr<FramePipe> out)
      : in_(std::move(in)), out_(std::move(out)) {}
  ~InMemoryConnection() override { Close(); }

  absl::Status Send(const Frame& frame) override;
  absl::StatusOr<Frame> Recv() override;
  absl::StatusOr<std::optional<Frame>> TryRecv() override;
  void Close() override;

 private:
  std::shared_ptr<FramePipe> in_;
  std::shared_ptr<FramePipe> out_;
};

// Two connected in-memory endpoints.
std::pair<std::unique_ptr<InMemoryConnection>, std::unique_ptr<InMemoryConnection>>
MakeInMemoryPair();

class SocketConnection : public Connection {
 public:
  explicit SocketConnection(int fd) : fd_(fd) {}
  ~SocketConnection() override;
  SocketConnection(const SocketConnection&) = delete;
  SocketConnection& operator=(const SocketConnection&) = delete;

  absl::Status Send(const Frame& frame) override;
  absl::StatusOr<Frame> Recv() override;
  absl::StatusOr<std::optional<Frame>> TryRecv() override;
  void Close() override;

 private:
  // Reads once into the frame reader; blocking or MSG_DONTWAIT.
  absl::Status Fill(bool block, bool* got_bytes);

  std::mutex send_mu_;
  std::atomic<int> fd_;
  FrameReader reader_;
};

class SocketListener {
 public:
  // Binds and listens on a Unix-domain socket path, replacing a stale file.
  static absl::StatusOr<std::unique_ptr<SocketListener>> Listen(const std::string& path);
  ~SocketListener();

  absl::StatusOr<std::unique_ptr<SocketConnection>> Accept();
  const std::string& path() const { return path_; }

 private:
  SocketListener(int fd, std::string path) : fd_(fd), path_(std::move(path)) {}
  int fd_;
  std::string path_;
};

absl::StatusOr<std::unique_ptr<SocketConnection>> ConnectSocket(const std::string& path);

// Master-side multiplexer: merges frames from many worker connections into a
// single ordered receive stream. Workers are identified by the `worker` field
// of the first message they send. Per-worker order is preserved; the total
// order is arrival order at the hub.
class MasterHub : public MasterEndpoint {
 public:
  MasterHub();
  ~MasterHub() override;
  MasterHub(const MasterHub&) = delete;
  MasterHub& operator=(const MasterHub&) = delete;

  // Starts a reader thread for the connection.
  void Attach(std::unique_ptr<Connection> conn);

  // Next worker message; TransportClosed once every attached connection has
  // closed and the queue is drained.
  absl::StatusOr<WireMessage> Recv() override;
  absl::Status Send(const MasterDirective& directive) override;
  double Now() const override;
  void CloseAll();
  size_t attached() const;

 private:
  struct Peer {
    std::unique_ptr<Connection> conn;
    std::thread reader;
  };

  void ReaderLoop(size_t index);

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<WireMessage> inbox_;
  std::vector<std::unique_ptr<Peer>> peers_;
  std::map<WorkerId, size_t> routes_;
  size_t open_ = 0;
  absl::Status error_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace rafiki

#endif  // RAFIKI_TRANSPORT_H_
