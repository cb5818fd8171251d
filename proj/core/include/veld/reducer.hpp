#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "veld/error.hpp"
#include "veld/state.hpp"

namespace veld {

struct KindSpec {
  std::string_view app_id;
  std::string_view kind;
};

/// The fixed action vocabulary, one entry per (app, kind).
std::span<const KindSpec> registered_kinds();

bool is_registered(std::string_view app_id, std::string_view kind);

struct ActionError {
  ErrorCode code;
  std::string detail;

  bool operator==(const ActionError&) const = default;
};

/// Reducer outcome. On error `state` is the input state, untouched.
struct ApplyResult {
  RoomState state;
  std::optional<ActionError> error;

  bool ok() const { return !error.has_value(); }
};

// Pure and deterministic. Requires `action.seq`; throws std::invalid_argument
// for an unsequenced envelope since that is a caller bug, not an action error.
ApplyResult apply_action(const RoomState& state, const ActionEnvelope& action);

enum class Authorization { Accept, Reject };

/// Instructors may issue every registered kind; students none of them (all
/// registered kinds mutate state).
Authorization authorize(Role role, const ActionEnvelope& action);

/// True when the action targets the bound app or a room-wide app.
bool is_relevant(const ActionEnvelope& action, const DisplayBinding& binding);

// Presence changes. Leaving also drops the occupant's group and pod
// assignments so the room invariants keep holding.
RoomState with_occupant(RoomState state, const std::string& client_id);
RoomState without_occupant(RoomState state, const std::string& client_id);

/// The slice of a room a client bound to `binding` keeps current: the bound
/// app plus every room-wide field.
RoomState project_view(const RoomState& state, const DisplayBinding& binding);

}  // namespace veld
