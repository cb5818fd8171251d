#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>

#include <nlohmann/json.hpp>

namespace veld {

using Json = nlohmann::json;

enum class Role { Instructor, Student };

std::string_view to_string(Role role);

// App identifiers with a fixed meaning across every room.
inline constexpr std::string_view kSlidesApp = "slides";
inline constexpr std::string_view kFaceOffApp = "faceoff";
inline constexpr std::string_view kPodsApp = "pods";
inline constexpr std::string_view kGroupsApp = "groups";

/// A sequenced, attributed state-mutation command scoped to a room and app.
/// `seq` is empty until the server accepts the action.
struct ActionEnvelope {
  std::optional<std::uint64_t> seq;
  std::string room_id;
  std::string app_id;
  std::string actor_id;
  std::string kind;
  Json payload = Json::object();
  std::int64_t client_ts = 0;

  bool operator==(const ActionEnvelope&) const = default;
};

struct SlideShowState {
  std::optional<std::string> deck_id;
  std::uint32_t slide_index = 0;
  std::uint32_t deck_length = 0;

  bool operator==(const SlideShowState&) const = default;
};

enum class FaceOffPhase { Lobby, PromptShown, Revealed, Finished };

std::string_view to_string(FaceOffPhase phase);

struct FaceOffState {
  FaceOffPhase phase = FaceOffPhase::Lobby;
  std::uint32_t round = 0;
  std::optional<std::string> prompt_id;
  std::map<std::string, std::uint64_t> scores;

  bool operator==(const FaceOffState&) const = default;
};

using AppState = std::variant<SlideShowState, FaceOffState>;

/// Per-lesson shared state. Only the display apps registered for the lesson
/// appear in `apps`; the room-wide apps (pods, groups) live in the flat fields.
struct RoomState {
  std::string room_id;
  std::map<std::string, AppState> apps;
  bool pods_locked = false;
  std::map<std::string, std::string> pod_assignment;
  std::set<std::string> occupants;
  std::map<std::string, std::string> group_assignment;

  bool operator==(const RoomState&) const = default;
};

/// The app a client's display is currently showing.
struct DisplayBinding {
  std::string app_id;

  bool operator==(const DisplayBinding&) const = default;
};

/// Fresh room with default state for each display app. Throws Error
/// (InvalidApps) for an app id that has no state model.
RoomState make_room_state(std::string room_id,
                          const std::set<std::string>& display_apps);

bool is_display_app(std::string_view app_id);
bool is_room_wide_app(std::string_view app_id);

bool satisfies_invariants(const SlideShowState& s);
bool satisfies_invariants(const FaceOffState& s);
bool satisfies_invariants(const RoomState& s);

// Canonical JSON form. nlohmann::json objects are std::map backed, so keys
// always serialize in lexicographic byte order.
Json to_json(const RoomState& state);
RoomState room_state_from_json(const Json& j);

Json to_json(const ActionEnvelope& action);
ActionEnvelope action_from_json(const Json& j);

}  // namespace veld
