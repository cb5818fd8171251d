#include "veld/tcp.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <istream>
#include <mutex>
#include <thread>
#include <vector>

#include <boost/asio.hpp>

#include "veld/error.hpp"

namespace veld {

namespace asio = boost::asio;
using asio::ip::tcp;

namespace {

constexpr std::size_t kMaxLineBytes = 1 << 20;

// Socket plus a write queue. All socket operations run on the socket's
// strand; the queue itself is guarded by a mutex so send() may be called
// from any thread.
class LineConnection : public LineChannel,
                       public std::enable_shared_from_this<LineConnection> {
 public:
  using LineHandler = std::function<void(std::string_view)>;
  using CloseHandler = std::function<void()>;

  explicit LineConnection(tcp::socket socket)
      : socket_(std::move(socket)), buffer_(kMaxLineBytes) {}

  void start(LineHandler on_line, CloseHandler on_close) {
    on_line_ = std::move(on_line);
    on_close_ = std::move(on_close);
    asio::post(socket_.get_executor(), [self = shared_from_this()] { self->read_next(); });
  }

  void send(std::string line) override {
    line.push_back('\n');
    std::lock_guard lock(mu_);
    if (closing_) return;
    out_.push_back(std::move(line));
    if (writing_) return;
    writing_ = true;
    asio::post(socket_.get_executor(), [self = shared_from_this()] { self->write_next(); });
  }

  void close() override {
    std::lock_guard lock(mu_);
    if (closing_) return;
    closing_ = true;
    if (!writing_) {
      asio::post(socket_.get_executor(), [self = shared_from_this()] { self->shutdown(); });
    }
  }

 private:
  void read_next() {
    asio::async_read_until(
        socket_, buffer_, '\n',
        [self = shared_from_this()](boost::system::error_code ec, std::size_t) {
          if (ec) {
            self->finish();
            return;
          }
          std::istream in(&self->buffer_);
          std::string line;
          std::getline(in, line);
          if (!line.empty() && line.back() == '\r') line.pop_back();
          if (!line.empty() && self->on_line_) self->on_line_(line);
          self->read_next();
        });
  }

  void write_next() {
    const std::string* front = nullptr;
    {
      std::lock_guard lock(mu_);
      front = &out_.front();
    }
    asio::async_write(socket_, asio::buffer(*front),
                      [self = shared_from_this()](boost::system::error_code ec, std::size_t) {
                        bool more = false;
                        bool shut = false;
                        {
                          std::lock_guard lock(self->mu_);
                          self->out_.pop_front();
                          if (ec) self->out_.clear();
                          more = !self->out_.empty();
                          self->writing_ = more;
                          shut = !more && self->closing_;
                        }
                        if (ec) {
                          self->finish();
                        } else if (more) {
                          self->write_next();
                        } else if (shut) {
                          self->shutdown();
                        }
                      });
  }

  void shutdown() {
    boost::system::error_code ignored;
    socket_.shutdown(tcp::socket::shutdown_both, ignored);
    socket_.close(ignored);
  }

  void finish() {
    if (finished_.exchange(true)) return;
    {
      std::lock_guard lock(mu_);
      closing_ = true;
    }
    boost::system::error_code ignored;
    socket_.close(ignored);
    if (on_close_) on_close_();
    on_line_ = nullptr;
    on_close_ = nullptr;
  }

  tcp::socket socket_;
  asio::streambuf buffer_;
  LineHandler on_line_;
  CloseHandler on_close_;
  std::mutex mu_;
  std::deque<std::string> out_;
  bool writing_ = false;
  bool closing_ = false;
  std::atomic<bool> finished_{false};
};

class ChannelPeer : public Peer {
 public:
  explicit ChannelPeer(std::weak_ptr<LineConnection> conn) : conn_(std::move(conn)) {}
  void send(std::string line) override {
    if (auto c = conn_.lock()) c->send(std::move(line));
  }
  void close() override {
    if (auto c = conn_.lock()) c->close();
  }

 private:
  std::weak_ptr<LineConnection> conn_;
};

void run_threads(asio::io_context& io, std::vector<std::thread>& threads, std::size_t n) {
  for (std::size_t i = 0; i < std::max<std::size_t>(n, 1); ++i) {
    threads.emplace_back([&io] { io.run(); });
  }
}

}  // namespace

// ---------------------------------------------------------------------------

struct TcpServer::Impl {
  SyncServer& server;
  asio::io_context io;
  asio::executor_work_guard<asio::io_context::executor_type> work{io.get_executor()};
  tcp::acceptor acceptor{io};
  asio::steady_timer presence_timer{io};
  std::vector<std::thread> threads;
  bool stopped = false;

  explicit Impl(SyncServer& s) : server(s) {}

  void accept_next() {
    acceptor.async_accept(asio::make_strand(io), [this](boost::system::error_code ec,
                                                        tcp::socket socket) {
      if (ec) {
        if (ec != asio::error::operation_aborted) accept_next();
        return;
      }
      boost::system::error_code ignored;
      socket.set_option(tcp::no_delay(true), ignored);
      auto conn = std::make_shared<LineConnection>(std::move(socket));
      const ConnectionId id = server.connect(std::make_shared<ChannelPeer>(conn));
      SyncServer* srv = &server;
      conn->start([srv, id](std::string_view line) { srv->receive(id, line); },
                  [srv, id] { srv->disconnect(id); });
      accept_next();
    });
  }

  void tick_presence() {
    presence_timer.expires_after(std::chrono::milliseconds(25));
    presence_timer.async_wait([this](boost::system::error_code ec) {
      if (ec) return;
      server.flush_presence();
      tick_presence();
    });
  }
};

TcpServer::TcpServer(SyncServer& server, std::uint16_t port, std::size_t threads,
                     const std::string& address)
    : impl_(std::make_unique<Impl>(server)) {
  tcp::endpoint endpoint(asio::ip::make_address(address), port);
  impl_->acceptor.open(endpoint.protocol());
  impl_->acceptor.set_option(tcp::acceptor::reuse_address(true));
  impl_->acceptor.bind(endpoint);
  impl_->acceptor.listen(asio::socket_base::max_listen_connections);
  impl_->accept_next();
  impl_->tick_presence();
  run_threads(impl_->io, impl_->threads, threads);
}

TcpServer::~TcpServer() { stop(); }

std::uint16_t TcpServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void TcpServer::stop() {
  if (impl_->stopped) return;
  impl_->stopped = true;
  impl_->work.reset();
  impl_->io.stop();
  for (auto& t : impl_->threads) t.join();
  impl_->threads.clear();
}

// ---------------------------------------------------------------------------

struct TcpClientPool::Impl {
  asio::io_context io;
  asio::executor_work_guard<asio::io_context::executor_type> work{io.get_executor()};
  std::vector<std::thread> threads;
};

TcpClientPool::TcpClientPool(std::size_t threads) : impl_(std::make_unique<Impl>()) {
  run_threads(impl_->io, impl_->threads, threads);
}

TcpClientPool::~TcpClientPool() { stop(); }

void TcpClientPool::stop() {
  impl_->work.reset();
  impl_->io.stop();
  for (auto& t : impl_->threads) t.join();
  impl_->threads.clear();
}

std::shared_ptr<LineChannel> TcpClientPool::connect(const std::string& host, std::uint16_t port,
                                                    LineHandler on_line, CloseHandler on_close) {
  tcp::socket socket(asio::make_strand(impl_->io));
  boost::system::error_code ec;
  tcp::resolver resolver(impl_->io);
  auto endpoints = resolver.resolve(host, std::to_string(port), ec);
  if (!ec) asio::connect(socket, endpoints, ec);
  if (ec) {
    throw Error(ErrorCode::ConnectFailure,
                "cannot connect to " + host + ":" + std::to_string(port) + ": " + ec.message());
  }
  socket.set_option(tcp::no_delay(true), ec);
  auto conn = std::make_shared<LineConnection>(std::move(socket));
  conn->start(std::move(on_line), std::move(on_close));
  return conn;
}

// ---------------------------------------------------------------------------

struct BlockingLineClient::Impl {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::string> lines;
  bool closed = false;
  // Torn down by the destructor on the owning thread, so an I/O thread never
  // joins itself and the socket goes before its io_context.
  std::unique_ptr<TcpClientPool> pool = std::make_unique<TcpClientPool>(1);
  std::shared_ptr<LineChannel> channel;
};

BlockingLineClient::BlockingLineClient(const std::string& host, std::uint16_t port)
    : impl_(std::make_shared<Impl>()) {
  std::weak_ptr<Impl> weak = impl_;
  impl_->channel = impl_->pool->connect(
      host, port,
      [weak](std::string_view line) {
        if (auto self = weak.lock()) {
          std::lock_guard lock(self->mu);
          self->lines.emplace_back(line);
          self->cv.notify_all();
        }
      },
      [weak] {
        if (auto self = weak.lock()) {
          std::lock_guard lock(self->mu);
          self->closed = true;
          self->cv.notify_all();
        }
      });
}

BlockingLineClient::~BlockingLineClient() {
  close();
  impl_->pool->stop();
  impl_->channel.reset();
  impl_->pool.reset();
}

void BlockingLineClient::send(std::string line) { impl_->channel->send(std::move(line)); }

std::optional<std::string> BlockingLineClient::next_line(std::chrono::milliseconds timeout) {
  std::unique_lock lock(impl_->mu);
  impl_->cv.wait_for(lock, timeout, [&] { return !impl_->lines.empty() || impl_->closed; });
  if (impl_->lines.empty()) return std::nullopt;
  std::string line = std::move(impl_->lines.front());
  impl_->lines.pop_front();
  return line;
}

bool BlockingLineClient::wait_closed(std::chrono::milliseconds timeout) {
  std::unique_lock lock(impl_->mu);
  return impl_->cv.wait_for(lock, timeout, [&] { return impl_->closed; });
}

void BlockingLineClient::close() {
  if (impl_->channel) impl_->channel->close();
}

}  // namespace veld
