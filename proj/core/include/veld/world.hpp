#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "veld/audio.hpp"
#include "veld/geometry.hpp"

namespace veld {

struct Pod {
  std::string pod_id;
  Vec3 center;
  double radius = 1.0;

  bool operator==(const Pod&) const = default;
};

/// One-way link; the reverse direction is a separate portal in the target.
struct Portal {
  Vec3 position;
  std::string target;

  bool operator==(const Portal&) const = default;
};

// Guiding indicators and pathways: carried through load/save, no behavior.
struct Decoration {
  std::string name;
  Vec3 position;

  bool operator==(const Decoration&) const = default;
};

struct LessonModule {
  std::string name;
  Box bounds;
  Vec3 spawn;
  std::vector<std::string> apps;
  std::string central;
  std::vector<Pod> pods;
  std::vector<Portal> portals;
  std::vector<Decoration> decor;

  const Pod* find_pod(std::string_view pod_id) const;

  bool operator==(const LessonModule&) const = default;
};

inline constexpr double kDefaultPortalActivationDistance = 1.5;

/// Immutable lesson registry. Each lesson becomes one room of the same name.
class World {
 public:
  // Parses and validates a world config. Throws Error with ParseError,
  // DuplicateName, DanglingPortal, SelfPortal, SpawnOutOfBounds,
  // InvalidBounds, InvalidApps, InvalidPodRadius, PodOutOfBounds,
  // DuplicatePod, PortalOutOfBounds, InvalidAudioZone or InvalidConfig.
  static World load(std::string_view config_text);
  static World load_file(const std::string& path);

  std::string serialize() const;
  Json to_json() const;

  const std::vector<LessonModule>& lessons() const { return lessons_; }
  const LessonModule* find(std::string_view name) const;
  const std::optional<AudioZone>& audio_zone() const { return audio_zone_; }
  double portal_activation_distance() const { return activation_distance_; }

  bool operator==(const World&) const = default;

 private:
  std::vector<LessonModule> lessons_;
  std::optional<AudioZone> audio_zone_;
  double activation_distance_ = kDefaultPortalActivationDistance;
};

struct Relocation {
  std::string lesson;
  Vec3 position;

  bool operator==(const Relocation&) const = default;
};

/// Destination of a teleport: the lesson's spawn point. Throws UnknownRoom.
Relocation resolve_teleport(const World& world, std::string_view lesson);

// Destination of stepping through portal `portal_index` of `current_lesson`
// while standing at `position`. Throws UnknownRoom, UnknownPortal or TooFar.
Relocation resolve_portal(const World& world, std::string_view current_lesson,
                          std::size_t portal_index, Vec3 position);

/// Throws UnknownPod if any assigned pod id is not a pod of `lesson`.
void validate_pod_assignment(const LessonModule& lesson,
                             const std::map<std::string, std::string>& assignment);

}  // namespace veld
