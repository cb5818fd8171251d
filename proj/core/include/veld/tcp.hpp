#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "veld/server.hpp"

namespace veld {

/// One end of a newline-delimited stream. send() is thread-safe and keeps
/// call order; the newline is appended for you.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void send(std::string line) = 0;
  // Closes once queued lines are written.
  virtual void close() = 0;
};

// Serves a SyncServer over TCP. Each accepted socket becomes one connection;
// lines are read strictly one after another per socket, so a client's
// messages reach the server in order. `port` 0 picks an ephemeral port.
class TcpServer {
 public:
  TcpServer(SyncServer& server, std::uint16_t port, std::size_t threads = 2,
            const std::string& address = "0.0.0.0");
  ~TcpServer();

  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  std::uint16_t port() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Shared I/O threads for many outbound connections (the load harness).
class TcpClientPool {
 public:
  using LineHandler = std::function<void(std::string_view)>;
  using CloseHandler = std::function<void()>;

  explicit TcpClientPool(std::size_t threads = 1);
  ~TcpClientPool();

  TcpClientPool(const TcpClientPool&) = delete;
  TcpClientPool& operator=(const TcpClientPool&) = delete;

  // Stops the I/O threads; no handler runs after this returns. Channels may
  // be released afterwards but must not outlive the pool.
  void stop();

  // Handlers for one channel never run concurrently with each other.
  // Throws Error(ConnectFailure).
  std::shared_ptr<LineChannel> connect(const std::string& host, std::uint16_t port,
                                       LineHandler on_line, CloseHandler on_close = {});

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Synchronous client for tests and scripts.
class BlockingLineClient {
 public:
  BlockingLineClient(const std::string& host, std::uint16_t port);
  ~BlockingLineClient();

  void send(std::string line);
  std::optional<std::string> next_line(std::chrono::milliseconds timeout = std::chrono::seconds(5));
  /// True once the server has closed the stream (after draining received lines).
  bool wait_closed(std::chrono::milliseconds timeout = std::chrono::seconds(5));
  void close();

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

}  // namespace veld
