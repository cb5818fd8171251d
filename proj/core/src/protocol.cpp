#include "veld/protocol.hpp"

#include <cmath>

#include "veld/error.hpp"

namespace veld::wire {

namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

[[noreturn]] void malformed(const std::string& detail) {
  throw Error(ErrorCode::MalformedMessage, detail);
}

const Json& field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) malformed(std::string("missing field '") + key + "'");
  return *it;
}

std::string string_at(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_string()) malformed(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

double number_at(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number()) malformed(std::string("field '") + key + "' must be a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) malformed(std::string("field '") + key + "' must be finite");
  return d;
}

std::int64_t int_at(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number_integer()) malformed(std::string("field '") + key + "' must be an integer");
  return v.get<std::int64_t>();
}

std::uint64_t uint_at(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    malformed(std::string("field '") + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

Json object_at(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_object()) malformed(std::string("field '") + key + "' must be an object");
  return v;
}

Json parse_object(std::string_view line) {
  Json j = Json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded()) malformed("not valid JSON");
  if (!j.is_object()) malformed("message must be a JSON object");
  if (!j.contains("t") || !j["t"].is_string()) malformed("missing message type 't'");
  return j;
}

Json position_fields(Json j, Vec3 p) {
  j["x"] = p.x;
  j["y"] = p.y;
  j["z"] = p.z;
  return j;
}

}  // namespace

std::string_view to_string(PresenceKind kind) {
  switch (kind) {
    case PresenceKind::Join: return "join";
    case PresenceKind::Leave: return "leave";
    case PresenceKind::Pos: return "pos";
  }
  return "join";
}

std::string encode(const ClientMessage& message) {
  Json j = std::visit(
      Overloaded{
          [](const Hello& m) {
            Json o = {{"t", "HELLO"}, {"name", m.name}};
            if (m.token) o["token"] = *m.token;
            return o;
          },
          [](const Join& m) {
            return Json{{"t", "JOIN"}, {"room", m.room}, {"binding", m.binding}};
          },
          [](const Leave&) { return Json{{"t", "LEAVE"}}; },
          [](const Action& m) {
            return Json{{"t", "ACTION"}, {"room", m.room},       {"app", m.app},
                        {"kind", m.kind}, {"payload", m.payload}, {"cts", m.cts}};
          },
          [](const Pos& m) { return position_fields(Json{{"t", "POS"}}, m.position); },
          [](const Teleport& m) { return Json{{"t", "TELEPORT"}, {"lesson", m.lesson}}; },
          [](const UsePortal& m) { return Json{{"t", "PORTAL"}, {"index", m.index}}; },
      },
      message);
  return j.dump();
}

std::string encode(const ServerMessage& message) {
  Json j = std::visit(
      Overloaded{
          [](const Welcome& m) {
            return Json{{"t", "WELCOME"},
                        {"client_id", m.client_id},
                        {"role", std::string(to_string(m.role))}};
          },
          [](const SnapshotMessage& m) {
            return Json{{"t", "SNAPSHOT"},
                        {"room", m.room_id},
                        {"last_seq", m.last_seq},
                        {"state", m.state}};
          },
          [](const Event& m) {
            const auto& a = m.action;
            return Json{{"t", "EVENT"},    {"seq", a.seq.value_or(0)}, {"room", a.room_id},
                        {"app", a.app_id}, {"kind", a.kind},           {"payload", a.payload},
                        {"actor", a.actor_id}};
          },
          [](const Ack& m) { return Json{{"t", "ACK"}, {"seq", m.seq}}; },
          [](const Presence& m) {
            Json o = {{"t", "PRESENCE"},
                      {"kind", std::string(to_string(m.kind))},
                      {"client_id", m.client_id}};
            if (m.position) o = position_fields(std::move(o), *m.position);
            if (m.name) o["name"] = *m.name;
            return o;
          },
          [](const ErrorReply& m) {
            return Json{{"t", "ERROR"}, {"code", m.code}, {"detail", m.detail}};
          },
      },
      message);
  return j.dump();
}

ClientMessage parse_client_message(std::string_view line) {
  const Json j = parse_object(line);
  const auto& t = j["t"].get_ref<const std::string&>();
  if (t == "HELLO") {
    Hello m;
    m.name = string_at(j, "name");
    if (auto it = j.find("token"); it != j.end() && !it->is_null()) {
      if (!it->is_string()) malformed("field 'token' must be a string");
      m.token = it->get<std::string>();
    }
    return m;
  }
  if (t == "JOIN") return Join{string_at(j, "room"), string_at(j, "binding")};
  if (t == "LEAVE") return Leave{};
  if (t == "ACTION") {
    return Action{string_at(j, "room"), string_at(j, "app"), string_at(j, "kind"),
                  object_at(j, "payload"), int_at(j, "cts")};
  }
  if (t == "POS") return Pos{{number_at(j, "x"), number_at(j, "y"), number_at(j, "z")}};
  if (t == "TELEPORT") return Teleport{string_at(j, "lesson")};
  if (t == "PORTAL") return UsePortal{static_cast<std::size_t>(uint_at(j, "index"))};
  malformed("unknown message type '" + t + "'");
}

ServerMessage parse_server_message(std::string_view line) {
  const Json j = parse_object(line);
  const auto& t = j["t"].get_ref<const std::string&>();
  if (t == "WELCOME") {
    auto role = string_at(j, "role");
    if (role != "instructor" && role != "student") malformed("unknown role '" + role + "'");
    return Welcome{string_at(j, "client_id"),
                   role == "instructor" ? Role::Instructor : Role::Student};
  }
  if (t == "SNAPSHOT") {
    return SnapshotMessage{string_at(j, "room"), uint_at(j, "last_seq"), object_at(j, "state")};
  }
  if (t == "EVENT") {
    ActionEnvelope a;
    a.seq = uint_at(j, "seq");
    a.room_id = string_at(j, "room");
    a.app_id = string_at(j, "app");
    a.kind = string_at(j, "kind");
    a.payload = object_at(j, "payload");
    a.actor_id = string_at(j, "actor");
    return Event{std::move(a)};
  }
  if (t == "ACK") return Ack{uint_at(j, "seq")};
  if (t == "PRESENCE") {
    Presence m;
    auto kind = string_at(j, "kind");
    if (kind == "join") {
      m.kind = PresenceKind::Join;
    } else if (kind == "leave") {
      m.kind = PresenceKind::Leave;
    } else if (kind == "pos") {
      m.kind = PresenceKind::Pos;
    } else {
      malformed("unknown presence kind '" + kind + "'");
    }
    m.client_id = string_at(j, "client_id");
    if (j.contains("x")) m.position = Vec3{number_at(j, "x"), number_at(j, "y"), number_at(j, "z")};
    if (j.contains("name") && j["name"].is_string()) m.name = j["name"].get<std::string>();
    return m;
  }
  if (t == "ERROR") return ErrorReply{string_at(j, "code"), string_at(j, "detail")};
  malformed("unknown message type '" + t + "'");
}

}  // namespace veld::wire
