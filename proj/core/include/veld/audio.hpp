#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "veld/geometry.hpp"
#include "veld/state.hpp"

namespace veld {

/// Voice attenuation parameters. Gain is 1 inside `ref_distance` and is
/// multiplied by `coef` for every doubling of distance beyond it.
struct AudioZone {
  double coef = 0.5;
  double ref_distance = 1.0;
  double epsilon = 1.0 / 64.0;  // audibility floor, about -36 dB

  bool operator==(const AudioZone&) const = default;
};

/// Throws Error(InvalidAudioZone) unless 0 < coef <= 1, ref_distance > 0 and
/// 0 < epsilon < 1.
void validate(const AudioZone& zone);

Json to_json(const AudioZone& zone);
AudioZone audio_zone_from_json(const Json& j);

// gain = coef^log2(d / ref_distance) for d > ref_distance, else 1.
//
// Evaluated as coef^log2(f) * coef^k with d / ref_distance = f * 2^k and
// f in [1, 2), the integer part applied as k successive multiplications.
// That makes gain(2d) == coef * gain(d) hold bit-for-bit, not just to
// rounding.
double gain(const AudioZone& zone, double d);

/// G[listener][speaker] over a fixed client order; symmetric, zero diagonal.
class GainMatrix {
 public:
  GainMatrix() = default;
  explicit GainMatrix(std::vector<std::string> ids);

  const std::vector<std::string>& ids() const { return ids_; }
  std::size_t size() const { return ids_.size(); }

  double at(std::size_t listener, std::size_t speaker) const {
    return values_[listener * ids_.size() + speaker];
  }
  void set(std::size_t listener, std::size_t speaker, double g) {
    values_[listener * ids_.size() + speaker] = g;
  }

 private:
  std::vector<std::string> ids_;
  std::vector<double> values_;
};

GainMatrix gain_matrix(const AudioZone& zone, const std::map<std::string, Vec3>& positions);

/// Smallest distance at which gain falls to epsilon or below.
/// Throws Error(NoPrivacy) when coef == 1.
double privacy_radius(const AudioZone& zone);

struct GroupPairPrivacy {
  std::string group_a;
  std::string group_b;
  bool is_private = false;
  double min_distance = 0.0;
  double max_cross_gain = 0.0;
};

struct PrivacyReport {
  double radius = 0.0;
  std::vector<GroupPairPrivacy> pairs;  // one per unordered pair of groups
};

// Every grouped client must have a position (std::invalid_argument otherwise).
// Throws Error(NoPrivacy) when coef == 1.
PrivacyReport check_group_privacy(const AudioZone& zone,
                                  const std::map<std::string, std::string>& groups,
                                  const std::map<std::string, Vec3>& positions);

Json to_json(const GainMatrix& matrix);
Json to_json(const PrivacyReport& report);

}  // namespace veld
