#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "veld/protocol.hpp"
#include "veld/server.hpp"
#include "veld/world.hpp"

namespace veld::testing {

/// Records every line the server sends to one connection.
class CapturePeer : public Peer {
 public:
  void send(std::string line) override;
  void close() override;

  bool closed() const;
  std::vector<std::string> lines() const;
  // Parsed messages received since the last take().
  std::vector<wire::ServerMessage> take();

 private:
  mutable std::mutex mu_;
  std::vector<std::string> lines_;
  std::size_t taken_ = 0;
  bool closed_ = false;
};

template <class T>
std::size_t count_of(const std::vector<wire::ServerMessage>& messages) {
  std::size_t n = 0;
  for (const auto& m : messages) n += std::holds_alternative<T>(m) ? 1 : 0;
  return n;
}

template <class T>
std::vector<T> all_of_type(const std::vector<wire::ServerMessage>& messages) {
  std::vector<T> out;
  for (const auto& m : messages) {
    if (auto* t = std::get_if<T>(&m)) out.push_back(*t);
  }
  return out;
}

inline constexpr const char* kToken = "secret-token";

// Two lessons: "unit2-island" (slides + faceoff, three pods, a portal to
// orientation) and "orientation" (slides only, a portal back).
World test_world();
ServerConfig test_config(std::size_t max_clients = 150, double presence_rate_hz = 0.0);

/// A SyncServer driven synchronously, with a settable clock.
class ServerFixture {
 public:
  struct Client {
    ConnectionId conn = 0;
    std::shared_ptr<CapturePeer> peer;
    std::string id;
    Role role = Role::Student;
  };

  explicit ServerFixture(ServerConfig config = test_config(), World world = test_world());

  SyncServer& server() { return *server_; }
  void set_time(double seconds) { *now_ = seconds; }

  Client hello(const std::string& name, bool instructor);
  // hello + join; the captured messages are drained.
  Client join(const std::string& name, bool instructor, const std::string& room = "unit2-island",
              const std::string& binding = "slides");

  void send(const Client& c, const wire::ClientMessage& message);
  void send_raw(const Client& c, const std::string& line);
  void action(const Client& c, const std::string& app, const std::string& kind,
              Json payload = Json::object(), const std::string& room = "unit2-island");

 private:
  std::shared_ptr<double> now_;
  std::unique_ptr<SyncServer> server_;
};

}  // namespace veld::testing
