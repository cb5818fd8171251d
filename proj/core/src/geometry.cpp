#include "veld/geometry.hpp"

namespace veld {

Vec3 clamp_to_sphere(Vec3 p, Vec3 center, double radius) {
  const Vec3 offset = p - center;
  const double d = norm(offset);
  if (d <= radius) return p;
  return center + (radius / d) * offset;
}

}  // namespace veld
