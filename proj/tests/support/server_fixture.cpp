#include "server_fixture.hpp"

#include <stdexcept>

namespace veld::testing {

void CapturePeer::send(std::string line) {
  std::lock_guard lock(mu_);
  lines_.push_back(std::move(line));
}

void CapturePeer::close() {
  std::lock_guard lock(mu_);
  closed_ = true;
}

bool CapturePeer::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

std::vector<std::string> CapturePeer::lines() const {
  std::lock_guard lock(mu_);
  return lines_;
}

std::vector<wire::ServerMessage> CapturePeer::take() {
  std::lock_guard lock(mu_);
  std::vector<wire::ServerMessage> out;
  for (; taken_ < lines_.size(); ++taken_) out.push_back(wire::parse_server_message(lines_[taken_]));
  return out;
}

World test_world() {
  return World::load(R"({
    "lessons": [
      {
        "name": "unit2-island",
        "bounds": {"min": [-50, 0, -50], "max": [50, 20, 50]},
        "spawn": [0, 0, -40],
        "apps": ["slides", "faceoff"],
        "central": "slides",
        "pods": [
          {"id": "pod-1", "center": [0, 0, 0], "radius": 1.0},
          {"id": "pod-2", "center": [10, 0, 0], "radius": 2.0},
          {"id": "pod-3", "center": [-10, 0, 5], "radius": 0.5}
        ],
        "portals": [{"position": [0, 0, -45], "target": "orientation"}],
        "decor": [{"name": "pathway", "position": [0, 0, -30]}]
      },
      {
        "name": "orientation",
        "bounds": {"min": [-10, 0, -10], "max": [10, 5, 10]},
        "spawn": [1, 0, 1],
        "apps": ["slides"],
        "central": "slides",
        "pods": [],
        "portals": [{"position": [9, 0, 9], "target": "unit2-island"}],
        "decor": []
      }
    ],
    "audio_zone": {"coef": 0.5, "ref_distance": 1.0, "epsilon": 0.015625}
  })");
}

ServerConfig test_config(std::size_t max_clients, double presence_rate_hz) {
  ServerConfig c;
  c.instructor_token = kToken;
  c.max_clients = max_clients;
  c.presence_rate_hz = presence_rate_hz;
  return c;
}

ServerFixture::ServerFixture(ServerConfig config, World world)
    : now_(std::make_shared<double>(0.0)) {
  auto now = now_;
  server_ = std::make_unique<SyncServer>(std::move(config), std::move(world), [now] { return *now; });
}

ServerFixture::Client ServerFixture::hello(const std::string& name, bool instructor) {
  Client c;
  c.peer = std::make_shared<CapturePeer>();
  c.conn = server_->connect(c.peer);
  send(c, wire::Hello{instructor ? std::optional<std::string>(kToken) : std::nullopt, name});
  auto messages = c.peer->take();
  if (messages.empty()) throw std::runtime_error("no reply to HELLO");
  if (auto* w = std::get_if<wire::Welcome>(&messages.front())) {
    c.id = w->client_id;
    c.role = w->role;
  }
  return c;
}

ServerFixture::Client ServerFixture::join(const std::string& name, bool instructor,
                                          const std::string& room, const std::string& binding) {
  Client c = hello(name, instructor);
  send(c, wire::Join{room, binding});
  c.peer->take();
  return c;
}

void ServerFixture::send(const Client& c, const wire::ClientMessage& message) {
  server_->receive(c.conn, wire::encode(message));
}

void ServerFixture::send_raw(const Client& c, const std::string& line) {
  server_->receive(c.conn, line);
}

void ServerFixture::action(const Client& c, const std::string& app, const std::string& kind,
                           Json payload, const std::string& room) {
  send(c, wire::Action{room, app, kind, std::move(payload), 0});
}

}  // namespace veld::testing
