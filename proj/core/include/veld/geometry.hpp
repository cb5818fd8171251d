#pragma once

#include <cmath>

namespace veld {

/// A point or offset in world space, meters.
struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool operator==(const Vec3&) const = default;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 v) { return {s * v.x, s * v.y, s * v.z}; }
};

inline double norm(Vec3 v) { return std::hypot(v.x, v.y, v.z); }

inline double distance(Vec3 a, Vec3 b) { return norm(a - b); }

inline bool is_finite(Vec3 v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

/// Axis-aligned box; inclusive on both faces.
struct Box {
  Vec3 min;
  Vec3 max;

  bool operator==(const Box&) const = default;

  bool contains(Vec3 p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y &&
           p.z >= min.z && p.z <= max.z;
  }
};

/// Nearest point of the closed ball (center, radius) to `p`.
Vec3 clamp_to_sphere(Vec3 p, Vec3 center, double radius);

}  // namespace veld
