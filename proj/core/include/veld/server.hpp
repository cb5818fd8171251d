#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "veld/audio.hpp"
#include "veld/digest.hpp"
#include "veld/protocol.hpp"
#include "veld/reducer.hpp"
#include "veld/world.hpp"

namespace veld {

struct ServerConfig {
  std::uint16_t listen_port = 7300;
  std::string instructor_token;
  std::string world_file;
  AudioZone audio_zone_defaults;
  std::size_t max_clients = 150;
  double presence_rate_hz = 10.0;  // per client; <= 0 disables coalescing

  /// Throws Error(InvalidConfig) on max_clients == 0 or an empty token.
  void validate() const;

  // `base_dir` resolves a relative world_file.
  static ServerConfig from_json(const Json& j, const std::string& base_dir = {});
  static ServerConfig load_file(const std::string& path);
  Json to_json() const;
};

/// Outbound half of one connection. Implementations must deliver lines in
/// call order and must not block.
class Peer {
 public:
  virtual ~Peer() = default;
  virtual void send(std::string line) = 0;
  virtual void close() = 0;
};

using ConnectionId = std::uint64_t;

struct ClientSession {
  std::string client_id;
  Role role = Role::Student;
  std::optional<std::string> room_id;
  std::optional<DisplayBinding> binding;
  std::optional<Vec3> position;
  std::string display_name;
};

/// Append-only per-room action log; entries[i].seq == i + 1.
class RoomLog {
 public:
  std::uint64_t next_seq() const { return entries_.size() + 1; }
  std::uint64_t last_seq() const { return entries_.size(); }
  void append(ActionEnvelope action);
  const std::vector<ActionEnvelope>& entries() const { return entries_; }

 private:
  std::vector<ActionEnvelope> entries_;
};

struct ServerCounters {
  std::uint64_t events_sent = 0;
  std::uint64_t acks_sent = 0;
  std::uint64_t rejections = 0;
  std::uint64_t presence_sent = 0;
};

struct RoomAudioReport {
  GainMatrix gains;
  std::optional<PrivacyReport> privacy;  // empty when the zone never attenuates
};

// Server-authoritative room sequencer. Transports call connect/receive/
// disconnect; every mutation of a room happens under that room's mutex, so
// each room has a single logical writer while distinct rooms proceed in
// parallel. Outbound lines for a room are handed to peers while the room
// lock is held, which keeps per-client delivery in seq order.
class SyncServer {
 public:
  using Clock = std::function<double()>;  // seconds, monotonic

  SyncServer(ServerConfig config, World world, Clock clock = {});
  ~SyncServer();

  SyncServer(const SyncServer&) = delete;
  SyncServer& operator=(const SyncServer&) = delete;

  ConnectionId connect(std::shared_ptr<Peer> peer);
  void receive(ConnectionId id, std::string_view line);
  void disconnect(ConnectionId id);

  /// Sends coalesced position updates whose rate window has elapsed.
  void flush_presence();

  // Admin surface. Submits a server-attributed pods:ASSIGN through the normal
  // pipeline; returns the assigned seq or the rejection.
  std::variant<std::uint64_t, ActionError> assign_pods(
      const std::string& room, const std::map<std::string, std::string>& assignment);

  const ServerConfig& config() const { return config_; }
  const World& world() const { return world_; }
  AudioZone audio_zone() const;

  // Introspection; each takes the room lock. Unknown rooms throw UnknownRoom.
  RoomState room_state(const std::string& room) const;
  StateDigest room_digest(const std::string& room) const;
  std::uint64_t last_seq(const std::string& room) const;
  std::vector<ActionEnvelope> room_log(const std::string& room) const;
  std::map<std::string, Vec3> room_positions(const std::string& room) const;
  RoomAudioReport audio_report(const std::string& room) const;

  std::size_t session_count() const;
  std::optional<ClientSession> session(const std::string& client_id) const;
  ServerCounters counters() const;

 private:
  struct Member;
  struct Room;
  struct Connection;

  void handle_hello(Connection& conn, const wire::Hello& hello);
  void handle_join(Connection& conn, const std::string& room, const std::string& binding);
  void handle_leave(Connection& conn);
  void handle_action(Connection& conn, const wire::Action& action);
  void handle_position(Connection& conn, Vec3 position);
  void handle_teleport(Connection& conn, const std::string& lesson);
  void handle_portal(Connection& conn, std::size_t index);

  void join_room(Connection& conn, Room& room, DisplayBinding binding);
  void leave_room(Connection& conn);
  std::variant<std::uint64_t, ActionError> submit(Room& room, ActionEnvelope action,
                                                  Peer* actor);
  std::optional<ActionError> validate_in_room(const Room& room, const ActionEnvelope& action) const;
  void clamp_locked_students(Room& room);
  void send_position(Room& room, Member& member, bool include_self);

  Room& room_or_throw(const std::string& room) const;
  std::shared_ptr<Connection> find_connection(ConnectionId id) const;
  static void send_error(Peer& peer, ErrorCode code, const std::string& detail);

  ServerConfig config_;
  World world_;
  Clock clock_;
  std::map<std::string, std::unique_ptr<Room>> rooms_;  // fixed after construction

  mutable std::mutex connections_mutex_;
  std::map<ConnectionId, std::shared_ptr<Connection>> connections_;
  std::map<std::string, ConnectionId> client_index_;
  std::size_t welcomed_ = 0;
  ConnectionId next_connection_ = 1;
  std::uint64_t next_client_ = 1;

  std::atomic<std::uint64_t> events_sent_{0};
  std::atomic<std::uint64_t> acks_sent_{0};
  std::atomic<std::uint64_t> rejections_{0};
  std::atomic<std::uint64_t> presence_sent_{0};
};

}  // namespace veld
