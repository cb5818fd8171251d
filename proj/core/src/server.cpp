#include "veld/server.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "veld/error.hpp"

namespace veld {

namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

constexpr double kNever = -std::numeric_limits<double>::infinity();

}  // namespace

// ---------------------------------------------------------------------------
// ServerConfig

void ServerConfig::validate() const {
  if (max_clients < 1) throw Error(ErrorCode::InvalidConfig, "max_clients must be at least 1");
  if (instructor_token.empty()) {
    throw Error(ErrorCode::InvalidConfig, "instructor_token must be non-empty");
  }
  veld::validate(audio_zone_defaults);
}

ServerConfig ServerConfig::from_json(const Json& j, const std::string& base_dir) {
  ServerConfig c;
  try {
    c.listen_port = j.value("listen_port", c.listen_port);
    c.instructor_token = j.at("instructor_token").get<std::string>();
    c.world_file = j.value("world_file", std::string{});
    if (auto it = j.find("audio_zone_defaults"); it != j.end()) {
      c.audio_zone_defaults = audio_zone_from_json(*it);
    }
    c.max_clients = j.value("max_clients", c.max_clients);
    c.presence_rate_hz = j.value("presence_rate_hz", c.presence_rate_hz);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  if (!c.world_file.empty() && !base_dir.empty() &&
      std::filesystem::path(c.world_file).is_relative()) {
    c.world_file = (std::filesystem::path(base_dir) / c.world_file).string();
  }
  c.validate();
  return c;
}

ServerConfig ServerConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  Json j = Json::parse(text.str(), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::InvalidConfig, "config is not valid JSON");
  return from_json(j, std::filesystem::path(path).parent_path().string());
}

Json ServerConfig::to_json() const {
  return {{"listen_port", listen_port},
          {"instructor_token", instructor_token},
          {"world_file", world_file},
          {"audio_zone_defaults", veld::to_json(audio_zone_defaults)},
          {"max_clients", max_clients},
          {"presence_rate_hz", presence_rate_hz}};
}

void RoomLog::append(ActionEnvelope action) {
  if (action.seq != next_seq()) throw std::logic_error("room log append out of sequence");
  entries_.push_back(std::move(action));
}

// ---------------------------------------------------------------------------
// Internal records

struct SyncServer::Member {
  std::string client_id;
  std::shared_ptr<Peer> peer;
  Role role = Role::Student;
  std::string name;
  DisplayBinding binding;
  Vec3 position;
  double last_presence = kNever;
  bool pending = false;
  bool pending_self = false;
};

struct SyncServer::Room {
  mutable std::mutex mu;
  const LessonModule* lesson = nullptr;
  RoomState state;
  RoomLog log;
  std::map<std::string, Member> members;
};

struct SyncServer::Connection {
  std::mutex mu;
  ConnectionId id = 0;
  std::shared_ptr<Peer> peer;
  std::optional<ClientSession> session;
  bool closed = false;
};

// ---------------------------------------------------------------------------

SyncServer::SyncServer(ServerConfig config, World world, Clock clock)
    : config_(std::move(config)), world_(std::move(world)), clock_(std::move(clock)) {
  if (config_.max_clients < 1) throw Error(ErrorCode::InvalidConfig, "max_clients must be at least 1");
  if (!clock_) {
    const auto start = std::chrono::steady_clock::now();
    clock_ = [start] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
  }
  for (const auto& lesson : world_.lessons()) {
    auto room = std::make_unique<Room>();
    room->lesson = &lesson;
    room->state = make_room_state(
        lesson.name, std::set<std::string>(lesson.apps.begin(), lesson.apps.end()));
    rooms_.emplace(lesson.name, std::move(room));
  }
}

SyncServer::~SyncServer() = default;

AudioZone SyncServer::audio_zone() const {
  return world_.audio_zone().value_or(config_.audio_zone_defaults);
}

void SyncServer::send_error(Peer& peer, ErrorCode code, const std::string& detail) {
  peer.send(wire::encode(wire::ServerMessage{wire::ErrorReply{std::string(to_string(code)), detail}}));
}

std::shared_ptr<SyncServer::Connection> SyncServer::find_connection(ConnectionId id) const {
  std::lock_guard lock(connections_mutex_);
  auto it = connections_.find(id);
  return it == connections_.end() ? nullptr : it->second;
}

SyncServer::Room& SyncServer::room_or_throw(const std::string& room) const {
  auto it = rooms_.find(room);
  if (it == rooms_.end()) throw Error(ErrorCode::UnknownRoom, "no room named '" + room + "'");
  return *it->second;
}

ConnectionId SyncServer::connect(std::shared_ptr<Peer> peer) {
  auto conn = std::make_shared<Connection>();
  conn->peer = std::move(peer);
  std::lock_guard lock(connections_mutex_);
  const ConnectionId id = next_connection_++;
  conn->id = id;
  connections_.emplace(id, std::move(conn));
  return id;
}

void SyncServer::receive(ConnectionId id, std::string_view line) {
  auto conn = find_connection(id);
  if (!conn) return;
  std::lock_guard lock(conn->mu);
  if (conn->closed) return;

  if (!conn->session) {
    std::optional<wire::Hello> hello;
    try {
      auto message = wire::parse_client_message(line);
      if (auto* h = std::get_if<wire::Hello>(&message)) hello = std::move(*h);
    } catch (const Error&) {
    }
    if (!hello) {
      send_error(*conn->peer, ErrorCode::MalformedHello, "first message must be HELLO");
      conn->closed = true;
      conn->peer->close();
      return;
    }
    handle_hello(*conn, *hello);
    return;
  }

  try {
    auto message = wire::parse_client_message(line);
    std::visit(Overloaded{
                   [&](const wire::Hello&) {
                     throw Error(ErrorCode::MalformedMessage, "HELLO already received");
                   },
                   [&](const wire::Join& m) { handle_join(*conn, m.room, m.binding); },
                   [&](const wire::Leave&) { handle_leave(*conn); },
                   [&](const wire::Action& m) { handle_action(*conn, m); },
                   [&](const wire::Pos& m) { handle_position(*conn, m.position); },
                   [&](const wire::Teleport& m) { handle_teleport(*conn, m.lesson); },
                   [&](const wire::UsePortal& m) { handle_portal(*conn, m.index); },
               },
               message);
  } catch (const Error& e) {
    send_error(*conn->peer, e.code(), e.detail());
  }
}

void SyncServer::disconnect(ConnectionId id) {
  auto conn = find_connection(id);
  if (!conn) return;
  {
    std::lock_guard lock(conn->mu);
    if (conn->session && conn->session->room_id) leave_room(*conn);
    conn->closed = true;
  }
  std::lock_guard lock(connections_mutex_);
  if (conn->session) {
    --welcomed_;
    client_index_.erase(conn->session->client_id);
  }
  connections_.erase(id);
}

void SyncServer::handle_hello(Connection& conn, const wire::Hello& hello) {
  ClientSession session;
  {
    std::lock_guard lock(connections_mutex_);
    if (welcomed_ >= config_.max_clients) {
      send_error(*conn.peer, ErrorCode::ServerFull,
                 "server is at capacity (" + std::to_string(config_.max_clients) + " clients)");
      conn.closed = true;
      conn.peer->close();
      return;
    }
    ++welcomed_;
    session.client_id = "c" + std::to_string(next_client_++);
    client_index_[session.client_id] = conn.id;
  }
  session.role = hello.token && *hello.token == config_.instructor_token ? Role::Instructor
                                                                         : Role::Student;
  session.display_name = hello.name;
  conn.session = session;
  conn.peer->send(wire::encode(wire::ServerMessage{wire::Welcome{session.client_id, session.role}}));
}

void SyncServer::handle_join(Connection& conn, const std::string& room_id,
                             const std::string& binding) {
  if (conn.session->room_id) {
    throw Error(ErrorCode::AlreadyJoined, "already in room '" + *conn.session->room_id + "'");
  }
  Room& room = room_or_throw(room_id);
  const auto& apps = room.lesson->apps;
  if (std::find(apps.begin(), apps.end(), binding) == apps.end()) {
    throw Error(ErrorCode::InvalidBinding, "room '" + room_id + "' has no app '" + binding + "'");
  }
  join_room(conn, room, DisplayBinding{binding});
}

void SyncServer::join_room(Connection& conn, Room& room, DisplayBinding binding) {
  auto& session = *conn.session;
  std::lock_guard lock(room.mu);
  room.state = with_occupant(std::move(room.state), session.client_id);

  Member member{session.client_id, conn.peer, session.role, session.display_name,
                binding,           room.lesson->spawn};
  const std::string joined = wire::encode(wire::ServerMessage{wire::Presence{
      wire::PresenceKind::Join, member.client_id, member.position, member.name}});
  for (auto& [_, other] : room.members) other.peer->send(joined);
  auto& self = room.members.insert_or_assign(member.client_id, std::move(member)).first->second;

  self.peer->send(wire::encode(wire::ServerMessage{make_snapshot(room.state, room.log.last_seq())}));
  for (const auto& [_, m] : room.members) {
    self.peer->send(wire::encode(wire::ServerMessage{
        wire::Presence{wire::PresenceKind::Pos, m.client_id, m.position, m.name}}));
  }
  session.room_id = room.state.room_id;
  session.binding = std::move(binding);
}

void SyncServer::handle_leave(Connection& conn) {
  if (!conn.session->room_id) throw Error(ErrorCode::NotInRoom, "not in a room");
  leave_room(conn);
}

void SyncServer::leave_room(Connection& conn) {
  auto& session = *conn.session;
  Room& room = room_or_throw(*session.room_id);
  {
    std::lock_guard lock(room.mu);
    room.state = without_occupant(std::move(room.state), session.client_id);
    room.members.erase(session.client_id);
    const std::string left = wire::encode(
        wire::ServerMessage{wire::Presence{wire::PresenceKind::Leave, session.client_id, {}, {}}});
    for (auto& [_, other] : room.members) other.peer->send(left);
  }
  session.room_id.reset();
  session.binding.reset();
}

void SyncServer::handle_action(Connection& conn, const wire::Action& message) {
  const auto& session = *conn.session;
  if (!session.room_id || *session.room_id != message.room) {
    throw Error(ErrorCode::NotInRoom, "not joined to room '" + message.room + "'");
  }
  ActionEnvelope action{std::nullopt,    message.room, message.app, session.client_id,
                        message.kind,    message.payload, message.cts};
  if (authorize(session.role, action) == Authorization::Reject) {
    ++rejections_;
    throw Error(ErrorCode::Unauthorized, "students may not change lesson state");
  }
  Room& room = room_or_throw(message.room);
  std::lock_guard lock(room.mu);
  auto outcome = submit(room, std::move(action), conn.peer.get());
  if (auto* err = std::get_if<ActionError>(&outcome)) {
    throw Error(err->code, err->detail);
  }
}

std::optional<ActionError> SyncServer::validate_in_room(const Room& room,
                                                       const ActionEnvelope& action) const {
  auto is_student = [&](const std::string& id) {
    auto it = room.members.find(id);
    return it != room.members.end() && it->second.role == Role::Student;
  };
  const Json& p = action.payload;
  if (action.app_id == kPodsApp && action.kind == "ASSIGN" && p.is_object() &&
      p.contains("assignment") && p["assignment"].is_object()) {
    for (const auto& [client, pod] : p["assignment"].items()) {
      if (!is_student(client)) {
        return ActionError{ErrorCode::UnknownStudent, "'" + client + "' is not a student in the room"};
      }
      if (pod.is_string() && !room.lesson->find_pod(pod.get<std::string>())) {
        return ActionError{ErrorCode::UnknownPod,
                           "lesson '" + room.lesson->name + "' has no pod '" + pod.get<std::string>() + "'"};
      }
    }
  }
  if (action.app_id == kFaceOffApp && action.kind == "AWARD_POINT" && p.is_object() &&
      p.contains("student_id") && p["student_id"].is_string()) {
    const auto student = p["student_id"].get<std::string>();
    if (!is_student(student)) {
      return ActionError{ErrorCode::UnknownStudent, "'" + student + "' is not a student in the room"};
    }
  }
  return std::nullopt;
}

std::variant<std::uint64_t, ActionError> SyncServer::submit(Room& room, ActionEnvelope action,
                                                            Peer* actor) {
  if (auto err = validate_in_room(room, action)) {
    ++rejections_;
    return *err;
  }
  action.seq = room.log.next_seq();
  auto result = apply_action(room.state, action);
  if (!result.ok()) {
    ++rejections_;
    return *result.error;
  }
  room.state = std::move(result.state);
  const std::uint64_t seq = *action.seq;

  if (actor) {
    actor->send(wire::encode(wire::ServerMessage{wire::Ack{seq}}));
    ++acks_sent_;
  }
  const std::string event = wire::encode(wire::ServerMessage{wire::Event{action}});
  for (auto& [id, member] : room.members) {
    if (id == action.actor_id) continue;
    member.peer->send(event);
    ++events_sent_;
  }
  const bool pods_changed = action.app_id == kPodsApp && action.kind != "UNLOCK";
  room.log.append(std::move(action));
  if (pods_changed) clamp_locked_students(room);
  return seq;
}

void SyncServer::clamp_locked_students(Room& room) {
  if (!room.state.pods_locked) return;
  for (const auto& [client, pod_id] : room.state.pod_assignment) {
    auto it = room.members.find(client);
    const Pod* pod = room.lesson->find_pod(pod_id);
    if (it == room.members.end() || !pod || it->second.role != Role::Student) continue;
    Member& member = it->second;
    const Vec3 clamped = clamp_to_sphere(member.position, pod->center, pod->radius);
    if (clamped == member.position) continue;
    member.position = clamped;
    send_position(room, member, true);
    member.last_presence = clock_();
    member.pending = member.pending_self = false;
  }
}

void SyncServer::send_position(Room& room, Member& member, bool include_self) {
  const std::string line = wire::encode(wire::ServerMessage{
      wire::Presence{wire::PresenceKind::Pos, member.client_id, member.position, std::nullopt}});
  for (auto& [id, other] : room.members) {
    if (id == member.client_id && !include_self) continue;
    other.peer->send(line);
    ++presence_sent_;
  }
}

void SyncServer::handle_position(Connection& conn, Vec3 requested) {
  const auto& session = *conn.session;
  if (!session.room_id) throw Error(ErrorCode::NotInRoom, "not in a room");
  Room& room = room_or_throw(*session.room_id);
  std::lock_guard lock(room.mu);
  Member& member = room.members.at(session.client_id);

  Vec3 stored = requested;
  if (room.state.pods_locked && member.role == Role::Student) {
    if (auto it = room.state.pod_assignment.find(member.client_id);
        it != room.state.pod_assignment.end()) {
      if (const Pod* pod = room.lesson->find_pod(it->second)) {
        stored = clamp_to_sphere(requested, pod->center, pod->radius);
      }
    }
  }
  member.position = stored;
  const bool corrected = !(stored == requested);

  const double now = clock_();
  const double interval = config_.presence_rate_hz > 0 ? 1.0 / config_.presence_rate_hz : 0.0;
  if (now - member.last_presence >= interval) {
    send_position(room, member, corrected || member.pending_self);
    member.last_presence = now;
    member.pending = member.pending_self = false;
  } else {
    member.pending = true;
    member.pending_self = member.pending_self || corrected;
  }
}

void SyncServer::flush_presence() {
  const double interval = config_.presence_rate_hz > 0 ? 1.0 / config_.presence_rate_hz : 0.0;
  for (auto& [_, room] : rooms_) {
    std::lock_guard lock(room->mu);
    const double now = clock_();
    for (auto& [id, member] : room->members) {
      if (!member.pending || now - member.last_presence < interval) continue;
      send_position(*room, member, member.pending_self);
      member.last_presence = now;
      member.pending = member.pending_self = false;
    }
  }
}

void SyncServer::handle_teleport(Connection& conn, const std::string& lesson) {
  const Relocation target = resolve_teleport(world_, lesson);
  Room& room = room_or_throw(target.lesson);
  const auto& apps = room.lesson->apps;
  DisplayBinding binding{room.lesson->central};
  if (conn.session->binding &&
      std::find(apps.begin(), apps.end(), conn.session->binding->app_id) != apps.end()) {
    binding = *conn.session->binding;
  }
  if (conn.session->room_id) leave_room(conn);
  join_room(conn, room, std::move(binding));
}

void SyncServer::handle_portal(Connection& conn, std::size_t index) {
  if (!conn.session->room_id) throw Error(ErrorCode::NotInRoom, "not in a room");
  Vec3 position;
  {
    Room& room = room_or_throw(*conn.session->room_id);
    std::lock_guard lock(room.mu);
    position = room.members.at(conn.session->client_id).position;
  }
  const Relocation target = resolve_portal(world_, *conn.session->room_id, index, position);
  handle_teleport(conn, target.lesson);
}

std::variant<std::uint64_t, ActionError> SyncServer::assign_pods(
    const std::string& room_id, const std::map<std::string, std::string>& assignment) {
  Room& room = room_or_throw(room_id);
  Json map = Json::object();
  for (const auto& [client, pod] : assignment) map[client] = pod;
  ActionEnvelope action{std::nullopt, room_id, std::string(kPodsApp), "server", "ASSIGN",
                        Json{{"assignment", std::move(map)}}, 0};
  std::lock_guard lock(room.mu);
  return submit(room, std::move(action), nullptr);
}

RoomState SyncServer::room_state(const std::string& room_id) const {
  const Room& room = room_or_throw(room_id);
  std::lock_guard lock(room.mu);
  return room.state;
}

StateDigest SyncServer::room_digest(const std::string& room_id) const {
  return digest(room_state(room_id));
}

std::uint64_t SyncServer::last_seq(const std::string& room_id) const {
  const Room& room = room_or_throw(room_id);
  std::lock_guard lock(room.mu);
  return room.log.last_seq();
}

std::vector<ActionEnvelope> SyncServer::room_log(const std::string& room_id) const {
  const Room& room = room_or_throw(room_id);
  std::lock_guard lock(room.mu);
  return room.log.entries();
}

std::map<std::string, Vec3> SyncServer::room_positions(const std::string& room_id) const {
  const Room& room = room_or_throw(room_id);
  std::lock_guard lock(room.mu);
  std::map<std::string, Vec3> out;
  for (const auto& [id, m] : room.members) out.emplace(id, m.position);
  return out;
}

RoomAudioReport SyncServer::audio_report(const std::string& room_id) const {
  const AudioZone zone = audio_zone();
  std::map<std::string, Vec3> positions;
  std::map<std::string, std::string> groups;
  {
    const Room& room = room_or_throw(room_id);
    std::lock_guard lock(room.mu);
    for (const auto& [id, m] : room.members) positions.emplace(id, m.position);
    groups = room.state.group_assignment;
  }
  RoomAudioReport report{gain_matrix(zone, positions), std::nullopt};
  if (zone.coef < 1.0) report.privacy = check_group_privacy(zone, groups, positions);
  return report;
}

std::size_t SyncServer::session_count() const {
  std::lock_guard lock(connections_mutex_);
  return welcomed_;
}

std::optional<ClientSession> SyncServer::session(const std::string& client_id) const {
  std::shared_ptr<Connection> conn;
  {
    std::lock_guard lock(connections_mutex_);
    auto it = client_index_.find(client_id);
    if (it == client_index_.end()) return std::nullopt;
    conn = connections_.at(it->second);
  }
  std::optional<ClientSession> out;
  {
    std::lock_guard lock(conn->mu);
    out = conn->session;
  }
  if (out && out->room_id) {
    const Room& room = room_or_throw(*out->room_id);
    std::lock_guard lock(room.mu);
    if (auto it = room.members.find(client_id); it != room.members.end()) {
      out->position = it->second.position;
    }
  }
  return out;
}

ServerCounters SyncServer::counters() const {
  return {events_sent_.load(), acks_sent_.load(), rejections_.load(), presence_sent_.load()};
}

}  // namespace veld
