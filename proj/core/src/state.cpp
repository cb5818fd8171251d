#include "veld/state.hpp"

#include "veld/error.hpp"

namespace veld {

std::string_view to_string(Role role) {
  return role == Role::Instructor ? "instructor" : "student";
}

std::string_view to_string(FaceOffPhase phase) {
  switch (phase) {
    case FaceOffPhase::Lobby: return "lobby";
    case FaceOffPhase::PromptShown: return "prompt_shown";
    case FaceOffPhase::Revealed: return "revealed";
    case FaceOffPhase::Finished: return "finished";
  }
  return "lobby";
}

namespace {

FaceOffPhase phase_from_string(const std::string& s) {
  if (s == "lobby") return FaceOffPhase::Lobby;
  if (s == "prompt_shown") return FaceOffPhase::PromptShown;
  if (s == "revealed") return FaceOffPhase::Revealed;
  if (s == "finished") return FaceOffPhase::Finished;
  throw Error(ErrorCode::ParseError, "unknown faceoff phase '" + s + "'");
}

Json optional_string(const std::optional<std::string>& s) {
  return s ? Json(*s) : Json(nullptr);
}

std::optional<std::string> optional_string_from(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::string>();
}

Json to_json(const AppState& app) {
  return std::visit(
      [](const auto& s) -> Json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SlideShowState>) {
          return {{"deck_id", optional_string(s.deck_id)},
                  {"slide_index", s.slide_index},
                  {"deck_length", s.deck_length}};
        } else {
          Json scores = Json::object();
          for (const auto& [id, pts] : s.scores) scores[id] = pts;
          return {{"phase", std::string(to_string(s.phase))},
                  {"round", s.round},
                  {"prompt_id", optional_string(s.prompt_id)},
                  {"scores", std::move(scores)}};
        }
      },
      app);
}

AppState app_from_json(const std::string& app_id, const Json& j) {
  if (app_id == kSlidesApp) {
    SlideShowState s;
    s.deck_id = optional_string_from(j.at("deck_id"));
    s.slide_index = j.at("slide_index").get<std::uint32_t>();
    s.deck_length = j.at("deck_length").get<std::uint32_t>();
    return s;
  }
  if (app_id == kFaceOffApp) {
    FaceOffState s;
    s.phase = phase_from_string(j.at("phase").get<std::string>());
    s.round = j.at("round").get<std::uint32_t>();
    s.prompt_id = optional_string_from(j.at("prompt_id"));
    for (const auto& [id, pts] : j.at("scores").items()) {
      s.scores[id] = pts.get<std::uint64_t>();
    }
    return s;
  }
  throw Error(ErrorCode::ParseError, "no state model for app '" + app_id + "'");
}

Json string_map(const std::map<std::string, std::string>& m) {
  Json out = Json::object();
  for (const auto& [k, v] : m) out[k] = v;
  return out;
}

}  // namespace

bool is_display_app(std::string_view app_id) {
  return app_id == kSlidesApp || app_id == kFaceOffApp;
}

bool is_room_wide_app(std::string_view app_id) {
  return app_id == kPodsApp || app_id == kGroupsApp;
}

RoomState make_room_state(std::string room_id,
                          const std::set<std::string>& display_apps) {
  RoomState state;
  state.room_id = std::move(room_id);
  for (const auto& app : display_apps) {
    if (app == kSlidesApp) {
      state.apps.emplace(app, SlideShowState{});
    } else if (app == kFaceOffApp) {
      state.apps.emplace(app, FaceOffState{});
    } else {
      throw Error(ErrorCode::InvalidApps, "no state model for app '" + app + "'");
    }
  }
  return state;
}

bool satisfies_invariants(const SlideShowState& s) {
  if (!s.deck_id) return s.slide_index == 0 && s.deck_length == 0;
  return s.slide_index < s.deck_length;
}

bool satisfies_invariants(const FaceOffState& s) {
  const bool idle =
      s.phase == FaceOffPhase::Lobby || s.phase == FaceOffPhase::Finished;
  if (idle == s.prompt_id.has_value()) return false;
  if (s.phase == FaceOffPhase::Lobby && s.round != 0) return false;
  return true;
}

bool satisfies_invariants(const RoomState& s) {
  for (const auto& [id, _] : s.group_assignment) {
    if (!s.occupants.contains(id)) return false;
  }
  for (const auto& [id, _] : s.pod_assignment) {
    if (!s.occupants.contains(id)) return false;
  }
  for (const auto& [id, app] : s.apps) {
    const bool ok = std::visit(
        [](const auto& a) { return satisfies_invariants(a); }, app);
    if (!ok) return false;
  }
  return true;
}

Json to_json(const RoomState& state) {
  Json apps = Json::object();
  for (const auto& [id, app] : state.apps) apps[id] = to_json(app);
  Json occupants = Json::array();
  for (const auto& id : state.occupants) occupants.push_back(id);
  return {{"room_id", state.room_id},
          {"apps", std::move(apps)},
          {"pods_locked", state.pods_locked},
          {"pod_assignment", string_map(state.pod_assignment)},
          {"occupants", std::move(occupants)},
          {"group_assignment", string_map(state.group_assignment)}};
}

RoomState room_state_from_json(const Json& j) {
  try {
    RoomState state;
    state.room_id = j.at("room_id").get<std::string>();
    for (const auto& [id, app] : j.at("apps").items()) {
      state.apps.emplace(id, app_from_json(id, app));
    }
    state.pods_locked = j.at("pods_locked").get<bool>();
    for (const auto& [k, v] : j.at("pod_assignment").items()) {
      state.pod_assignment[k] = v.get<std::string>();
    }
    for (const auto& id : j.at("occupants")) {
      state.occupants.insert(id.get<std::string>());
    }
    for (const auto& [k, v] : j.at("group_assignment").items()) {
      state.group_assignment[k] = v.get<std::string>();
    }
    return state;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

Json to_json(const ActionEnvelope& action) {
  Json j = {{"room", action.room_id},   {"app", action.app_id},
            {"actor", action.actor_id}, {"kind", action.kind},
            {"payload", action.payload}, {"cts", action.client_ts}};
  if (action.seq) j["seq"] = *action.seq;
  return j;
}

ActionEnvelope action_from_json(const Json& j) {
  try {
    ActionEnvelope a;
    if (j.contains("seq")) a.seq = j.at("seq").get<std::uint64_t>();
    a.room_id = j.at("room").get<std::string>();
    a.app_id = j.at("app").get<std::string>();
    a.actor_id = j.value("actor", std::string{});
    a.kind = j.at("kind").get<std::string>();
    a.payload = j.value("payload", Json::object());
    a.client_ts = j.value("cts", std::int64_t{0});
    return a;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

}  // namespace veld
