#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "veld/digest.hpp"
#include "veld/geometry.hpp"
#include "veld/state.hpp"

// Newline-delimited JSON wire protocol. Each message is one JSON object on one
// line; the "t" field names the message. encode() returns the object text
// without the trailing newline, transports add it.
namespace veld::wire {

// client -> server

struct Hello {
  std::optional<std::string> token;
  std::string name;
};

struct Join {
  std::string room;
  std::string binding;
};

struct Leave {};

struct Action {
  std::string room;
  std::string app;
  std::string kind;
  Json payload = Json::object();
  std::int64_t cts = 0;
};

struct Pos {
  Vec3 position;
};

// Relocation requests; the server answers with the same SNAPSHOT sequence
// as a JOIN into the destination room.
struct Teleport {
  std::string lesson;
};

struct UsePortal {
  std::size_t index = 0;
};

using ClientMessage =
    std::variant<Hello, Join, Leave, Action, Pos, Teleport, UsePortal>;

// server -> client

struct Welcome {
  std::string client_id;
  Role role = Role::Student;
};

struct Event {
  ActionEnvelope action;
};

struct Ack {
  std::uint64_t seq = 0;
};

enum class PresenceKind { Join, Leave, Pos };

struct Presence {
  PresenceKind kind = PresenceKind::Join;
  std::string client_id;
  std::optional<Vec3> position;
  std::optional<std::string> name;
};

struct ErrorReply {
  std::string code;
  std::string detail;
};

using ServerMessage =
    std::variant<Welcome, SnapshotMessage, Event, Ack, Presence, ErrorReply>;

std::string encode(const ClientMessage& message);
std::string encode(const ServerMessage& message);

// Both throw Error(MalformedMessage) on bad JSON, an unknown "t", or a
// missing or mistyped required field.
ClientMessage parse_client_message(std::string_view line);
ServerMessage parse_server_message(std::string_view line);

std::string_view to_string(PresenceKind kind);

}  // namespace veld::wire
