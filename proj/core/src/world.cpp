#include "veld/world.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "veld/error.hpp"

namespace veld {

namespace {

Vec3 vec3_from(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::ParseError, "expected [x, y, z]");
  Vec3 v{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  if (!is_finite(v)) throw Error(ErrorCode::ParseError, "coordinates must be finite");
  return v;
}

Json vec3_json(Vec3 v) { return Json::array({v.x, v.y, v.z}); }

LessonModule lesson_from(const Json& j) {
  LessonModule lesson;
  lesson.name = j.at("name").get<std::string>();
  if (lesson.name.empty()) throw Error(ErrorCode::ParseError, "lesson name must be non-empty");
  lesson.bounds = Box{vec3_from(j.at("bounds").at("min")), vec3_from(j.at("bounds").at("max"))};
  lesson.spawn = vec3_from(j.at("spawn"));
  lesson.apps = j.at("apps").get<std::vector<std::string>>();
  lesson.central = j.at("central").get<std::string>();
  for (const auto& p : j.value("pods", Json::array())) {
    lesson.pods.push_back(
        Pod{p.at("id").get<std::string>(), vec3_from(p.at("center")), p.at("radius").get<double>()});
  }
  for (const auto& p : j.value("portals", Json::array())) {
    lesson.portals.push_back(Portal{vec3_from(p.at("position")), p.at("target").get<std::string>()});
  }
  for (const auto& d : j.value("decor", Json::array())) {
    lesson.decor.push_back(Decoration{d.at("name").get<std::string>(), vec3_from(d.at("position"))});
  }
  return lesson;
}

void validate_lesson(const LessonModule& lesson) {
  const auto& b = lesson.bounds;
  const std::string where = "lesson '" + lesson.name + "'";
  if (b.min.x > b.max.x || b.min.y > b.max.y || b.min.z > b.max.z) {
    throw Error(ErrorCode::InvalidBounds, where + ": bounds min exceeds max");
  }
  if (!b.contains(lesson.spawn)) {
    throw Error(ErrorCode::SpawnOutOfBounds, where + ": spawn point outside bounds");
  }
  std::set<std::string> apps;
  for (const auto& app : lesson.apps) {
    if (!is_display_app(app)) throw Error(ErrorCode::InvalidApps, where + ": unknown app '" + app + "'");
    if (!apps.insert(app).second) throw Error(ErrorCode::InvalidApps, where + ": app '" + app + "' listed twice");
  }
  if (!apps.contains(lesson.central)) {
    throw Error(ErrorCode::InvalidApps, where + ": central display must be one of its apps");
  }
  std::set<std::string> pod_ids;
  for (const auto& pod : lesson.pods) {
    if (!(pod.radius > 0.0) || !std::isfinite(pod.radius)) {
      throw Error(ErrorCode::InvalidPodRadius, where + ": pod '" + pod.pod_id + "' radius must be positive");
    }
    if (!b.contains(pod.center)) {
      throw Error(ErrorCode::PodOutOfBounds, where + ": pod '" + pod.pod_id + "' center outside bounds");
    }
    if (!pod_ids.insert(pod.pod_id).second) {
      throw Error(ErrorCode::DuplicatePod, where + ": pod id '" + pod.pod_id + "' repeated");
    }
  }
  for (const auto& portal : lesson.portals) {
    if (!b.contains(portal.position)) {
      throw Error(ErrorCode::PortalOutOfBounds, where + ": portal to '" + portal.target + "' outside bounds");
    }
  }
}

}  // namespace

const Pod* LessonModule::find_pod(std::string_view pod_id) const {
  for (const auto& pod : pods) {
    if (pod.pod_id == pod_id) return &pod;
  }
  return nullptr;
}

World World::load(std::string_view config_text) {
  World world;
  try {
    const Json j = Json::parse(config_text);
    for (const auto& lesson : j.at("lessons")) world.lessons_.push_back(lesson_from(lesson));
    if (auto it = j.find("audio_zone"); it != j.end()) {
      world.audio_zone_ = audio_zone_from_json(*it);
    }
    world.activation_distance_ =
        j.value("portal_activation_distance", kDefaultPortalActivationDistance);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  if (!(world.activation_distance_ > 0.0) || !std::isfinite(world.activation_distance_)) {
    throw Error(ErrorCode::InvalidConfig, "portal_activation_distance must be positive");
  }

  std::set<std::string> names;
  for (const auto& lesson : world.lessons_) {
    if (!names.insert(lesson.name).second) {
      throw Error(ErrorCode::DuplicateName, "lesson name '" + lesson.name + "' repeated");
    }
  }
  for (const auto& lesson : world.lessons_) validate_lesson(lesson);
  for (const auto& lesson : world.lessons_) {
    for (const auto& portal : lesson.portals) {
      if (!names.contains(portal.target)) {
        throw Error(ErrorCode::DanglingPortal,
                    "lesson '" + lesson.name + "': portal target '" + portal.target + "' does not exist");
      }
      if (portal.target == lesson.name) {
        throw Error(ErrorCode::SelfPortal, "lesson '" + lesson.name + "': portal targets itself");
      }
    }
  }
  return world;
}

World World::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open world file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return load(text.str());
}

Json World::to_json() const {
  Json lessons = Json::array();
  for (const auto& lesson : lessons_) {
    Json pods = Json::array();
    for (const auto& p : lesson.pods) {
      pods.push_back({{"id", p.pod_id}, {"center", vec3_json(p.center)}, {"radius", p.radius}});
    }
    Json portals = Json::array();
    for (const auto& p : lesson.portals) {
      portals.push_back({{"position", vec3_json(p.position)}, {"target", p.target}});
    }
    Json decor = Json::array();
    for (const auto& d : lesson.decor) {
      decor.push_back({{"name", d.name}, {"position", vec3_json(d.position)}});
    }
    lessons.push_back({{"name", lesson.name},
                       {"bounds", {{"min", vec3_json(lesson.bounds.min)},
                                   {"max", vec3_json(lesson.bounds.max)}}},
                       {"spawn", vec3_json(lesson.spawn)},
                       {"apps", lesson.apps},
                       {"central", lesson.central},
                       {"pods", std::move(pods)},
                       {"portals", std::move(portals)},
                       {"decor", std::move(decor)}});
  }
  Json out = {{"lessons", std::move(lessons)},
              {"portal_activation_distance", activation_distance_}};
  if (audio_zone_) out["audio_zone"] = veld::to_json(*audio_zone_);
  return out;
}

std::string World::serialize() const { return to_json().dump(2); }

const LessonModule* World::find(std::string_view name) const {
  for (const auto& lesson : lessons_) {
    if (lesson.name == name) return &lesson;
  }
  return nullptr;
}

Relocation resolve_teleport(const World& world, std::string_view lesson) {
  const LessonModule* target = world.find(lesson);
  if (!target) throw Error(ErrorCode::UnknownRoom, "no lesson named '" + std::string(lesson) + "'");
  return Relocation{target->name, target->spawn};
}

Relocation resolve_portal(const World& world, std::string_view current_lesson,
                          std::size_t portal_index, Vec3 position) {
  const LessonModule* here = world.find(current_lesson);
  if (!here) {
    throw Error(ErrorCode::UnknownRoom, "no lesson named '" + std::string(current_lesson) + "'");
  }
  if (portal_index >= here->portals.size()) {
    throw Error(ErrorCode::UnknownPortal, "lesson '" + here->name + "' has no portal " +
                                              std::to_string(portal_index));
  }
  const Portal& portal = here->portals[portal_index];
  if (distance(position, portal.position) > world.portal_activation_distance()) {
    throw Error(ErrorCode::TooFar, "not within activation distance of the portal");
  }
  return resolve_teleport(world, portal.target);
}

void validate_pod_assignment(const LessonModule& lesson,
                             const std::map<std::string, std::string>& assignment) {
  for (const auto& [client, pod_id] : assignment) {
    if (!lesson.find_pod(pod_id)) {
      throw Error(ErrorCode::UnknownPod, "lesson '" + lesson.name + "' has no pod '" + pod_id + "'");
    }
  }
}

}  // namespace veld
