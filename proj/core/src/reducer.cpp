#include "veld/reducer.hpp"

#include <array>
#include <initializer_list>
#include <limits>
#include <stdexcept>

namespace veld {

namespace {

constexpr std::array<KindSpec, 13> kKinds{{
    {kSlidesApp, "SELECT_DECK"},
    {kSlidesApp, "NEXT_SLIDE"},
    {kSlidesApp, "PREV_SLIDE"},
    {kSlidesApp, "GOTO_SLIDE"},
    {kFaceOffApp, "NEXT_PROMPT"},
    {kFaceOffApp, "REVEAL"},
    {kFaceOffApp, "AWARD_POINT"},
    {kFaceOffApp, "RESET"},
    {kPodsApp, "LOCK"},
    {kPodsApp, "UNLOCK"},
    {kPodsApp, "ASSIGN"},
    {kGroupsApp, "ASSIGN"},
    {kGroupsApp, "CLEAR"},
}};

struct Rejection {
  ActionError error;
};

[[noreturn]] void reject(ErrorCode code, std::string detail) {
  throw Rejection{ActionError{code, std::move(detail)}};
}

void expect_keys(const Json& payload, std::initializer_list<std::string_view> keys) {
  if (!payload.is_object()) reject(ErrorCode::InvalidPayload, "payload must be an object");
  for (const auto& [key, _] : payload.items()) {
    bool known = false;
    for (auto k : keys) known = known || key == k;
    if (!known) reject(ErrorCode::InvalidPayload, "unexpected field '" + key + "'");
  }
  for (auto k : keys) {
    if (!payload.contains(k)) {
      reject(ErrorCode::InvalidPayload, "missing field '" + std::string(k) + "'");
    }
  }
}

std::uint32_t unsigned_field(const Json& payload, std::string_view key) {
  const Json& v = payload.at(std::string(key));
  if (!v.is_number_integer()) {
    reject(ErrorCode::InvalidPayload, std::string(key) + " must be an integer");
  }
  if (v.is_number_unsigned()) {
    auto u = v.get<std::uint64_t>();
    if (u <= std::numeric_limits<std::uint32_t>::max()) {
      return static_cast<std::uint32_t>(u);
    }
  } else if (auto i = v.get<std::int64_t>();
             i >= 0 && i <= std::numeric_limits<std::uint32_t>::max()) {
    return static_cast<std::uint32_t>(i);
  }
  reject(ErrorCode::InvalidPayload, std::string(key) + " out of range");
}

std::string string_field(const Json& payload, std::string_view key) {
  const Json& v = payload.at(std::string(key));
  if (!v.is_string() || v.get_ref<const std::string&>().empty()) {
    reject(ErrorCode::InvalidPayload, std::string(key) + " must be a non-empty string");
  }
  return v.get<std::string>();
}

std::map<std::string, std::string> assignment_field(const Json& payload,
                                                    const RoomState& state) {
  const Json& v = payload.at("assignment");
  if (!v.is_object()) reject(ErrorCode::InvalidPayload, "assignment must be an object");
  std::map<std::string, std::string> out;
  for (const auto& [client, label] : v.items()) {
    if (!label.is_string() || label.get_ref<const std::string&>().empty()) {
      reject(ErrorCode::InvalidPayload, "assignment values must be non-empty strings");
    }
    if (!state.occupants.contains(client)) {
      reject(ErrorCode::IllegalTransition, "'" + client + "' is not an occupant");
    }
    out.emplace(client, label.get<std::string>());
  }
  return out;
}

void reduce_slides(SlideShowState& s, const ActionEnvelope& a) {
  const Json& p = a.payload;
  if (a.kind == "SELECT_DECK") {
    expect_keys(p, {"deck_id", "deck_length"});
    auto deck = string_field(p, "deck_id");
    auto length = unsigned_field(p, "deck_length");
    if (length == 0) reject(ErrorCode::InvalidPayload, "deck_length must be at least 1");
    s = SlideShowState{std::move(deck), 0, length};
    return;
  }
  if (a.kind == "GOTO_SLIDE") {
    expect_keys(p, {"index"});
    auto index = unsigned_field(p, "index");
    if (!s.deck_id) reject(ErrorCode::IllegalTransition, "no deck selected");
    if (index >= s.deck_length) {
      reject(ErrorCode::IllegalTransition, "slide index past end of deck");
    }
    s.slide_index = index;
    return;
  }
  expect_keys(p, {});
  if (!s.deck_id) reject(ErrorCode::IllegalTransition, "no deck selected");
  // Navigation clamps at both ends of the deck.
  if (a.kind == "NEXT_SLIDE") {
    if (s.slide_index + 1 < s.deck_length) ++s.slide_index;
  } else {
    if (s.slide_index > 0) --s.slide_index;
  }
}

void reduce_faceoff(FaceOffState& s, const ActionEnvelope& a, const RoomState& room) {
  const Json& p = a.payload;
  if (a.kind == "NEXT_PROMPT") {
    expect_keys(p, {"prompt_id"});
    const Json& v = p.at("prompt_id");
    if (v.is_null()) {
      // A null prompt ends the game; scores are kept.
      if (s.phase != FaceOffPhase::PromptShown && s.phase != FaceOffPhase::Revealed) {
        reject(ErrorCode::IllegalTransition, "no game in progress");
      }
      s.phase = FaceOffPhase::Finished;
      s.prompt_id.reset();
      return;
    }
    auto prompt = string_field(p, "prompt_id");
    if (s.phase == FaceOffPhase::Finished) {
      reject(ErrorCode::IllegalTransition, "game finished; RESET first");
    }
    s.phase = FaceOffPhase::PromptShown;
    s.round += 1;
    s.prompt_id = std::move(prompt);
  } else if (a.kind == "REVEAL") {
    expect_keys(p, {});
    if (s.phase != FaceOffPhase::PromptShown) {
      reject(ErrorCode::IllegalTransition, "REVEAL requires a shown prompt");
    }
    s.phase = FaceOffPhase::Revealed;
  } else if (a.kind == "AWARD_POINT") {
    expect_keys(p, {"student_id"});
    auto student = string_field(p, "student_id");
    if (s.phase != FaceOffPhase::Revealed) {
      reject(ErrorCode::IllegalTransition, "points are awarded after REVEAL");
    }
    if (!room.occupants.contains(student)) {
      reject(ErrorCode::IllegalTransition, "'" + student + "' is not an occupant");
    }
    s.scores[student] += 1;
  } else {
    expect_keys(p, {});
    s = FaceOffState{};
  }
}

void reduce(RoomState& state, const ActionEnvelope& a) {
  if (!is_registered(a.app_id, a.kind)) {
    reject(ErrorCode::UnknownKind, "'" + a.kind + "' is not registered for app '" + a.app_id + "'");
  }
  if (a.app_id == kPodsApp) {
    if (a.kind == "ASSIGN") {
      expect_keys(a.payload, {"assignment"});
      state.pod_assignment = assignment_field(a.payload, state);
    } else {
      expect_keys(a.payload, {});
      state.pods_locked = a.kind == "LOCK";
    }
    return;
  }
  if (a.app_id == kGroupsApp) {
    if (a.kind == "ASSIGN") {
      expect_keys(a.payload, {"assignment"});
      state.group_assignment = assignment_field(a.payload, state);
    } else {
      expect_keys(a.payload, {});
      state.group_assignment.clear();
    }
    return;
  }
  auto it = state.apps.find(a.app_id);
  if (it == state.apps.end()) {
    reject(ErrorCode::UnknownKind, "app '" + a.app_id + "' is not part of room '" + state.room_id + "'");
  }
  if (auto* slides = std::get_if<SlideShowState>(&it->second)) {
    reduce_slides(*slides, a);
  } else {
    auto& faceoff = std::get<FaceOffState>(it->second);
    // AWARD_POINT reads occupants, so validate against the pre-action room.
    FaceOffState next = faceoff;
    reduce_faceoff(next, a, state);
    faceoff = std::move(next);
  }
}

}  // namespace

std::span<const KindSpec> registered_kinds() { return kKinds; }

bool is_registered(std::string_view app_id, std::string_view kind) {
  for (const auto& k : kKinds) {
    if (k.app_id == app_id && k.kind == kind) return true;
  }
  return false;
}

ApplyResult apply_action(const RoomState& state, const ActionEnvelope& action) {
  if (!action.seq) throw std::invalid_argument("apply_action requires a sequenced action");
  RoomState next = state;
  try {
    reduce(next, action);
  } catch (const Rejection& r) {
    return {state, r.error};
  } catch (const Json::exception& e) {
    return {state, ActionError{ErrorCode::InvalidPayload, e.what()}};
  }
  return {std::move(next), std::nullopt};
}

Authorization authorize(Role role, const ActionEnvelope& action) {
  (void)action;
  return role == Role::Instructor ? Authorization::Accept : Authorization::Reject;
}

bool is_relevant(const ActionEnvelope& action, const DisplayBinding& binding) {
  return action.app_id == binding.app_id || is_room_wide_app(action.app_id);
}

RoomState with_occupant(RoomState state, const std::string& client_id) {
  state.occupants.insert(client_id);
  return state;
}

RoomState without_occupant(RoomState state, const std::string& client_id) {
  state.occupants.erase(client_id);
  state.group_assignment.erase(client_id);
  state.pod_assignment.erase(client_id);
  return state;
}

RoomState project_view(const RoomState& state, const DisplayBinding& binding) {
  RoomState view = state;
  std::erase_if(view.apps, [&](const auto& entry) { return entry.first != binding.app_id; });
  return view;
}

}  // namespace veld
