#include "veld/audio.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "veld/error.hpp"

namespace veld {

void validate(const AudioZone& zone) {
  if (!(zone.coef > 0.0 && zone.coef <= 1.0)) {
    throw Error(ErrorCode::InvalidAudioZone, "coef must be in (0, 1]");
  }
  if (!(zone.ref_distance > 0.0) || !std::isfinite(zone.ref_distance)) {
    throw Error(ErrorCode::InvalidAudioZone, "ref_distance must be positive");
  }
  if (!(zone.epsilon > 0.0 && zone.epsilon < 1.0)) {
    throw Error(ErrorCode::InvalidAudioZone, "epsilon must be in (0, 1)");
  }
}

Json to_json(const AudioZone& zone) {
  return {{"coef", zone.coef}, {"ref_distance", zone.ref_distance}, {"epsilon", zone.epsilon}};
}

AudioZone audio_zone_from_json(const Json& j) {
  AudioZone zone;
  try {
    zone.coef = j.value("coef", zone.coef);
    zone.ref_distance = j.value("ref_distance", zone.ref_distance);
    zone.epsilon = j.value("epsilon", zone.epsilon);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidAudioZone, e.what());
  }
  validate(zone);
  return zone;
}

double gain(const AudioZone& zone, double d) {
  if (d <= zone.ref_distance) return 1.0;
  const double ratio = d / zone.ref_distance;
  if (std::isinf(ratio)) return zone.coef == 1.0 ? 1.0 : 0.0;
  int exponent = 0;
  const double mantissa = std::frexp(ratio, &exponent);  // ratio = mantissa * 2^exponent
  const double f = 2.0 * mantissa;                       // in [1, 2)
  const int doublings = exponent - 1;
  double g = std::pow(zone.coef, std::log2(f));
  for (int i = 0; i < doublings && g != 0.0; ++i) g *= zone.coef;
  return g;
}

GainMatrix::GainMatrix(std::vector<std::string> ids)
    : ids_(std::move(ids)), values_(ids_.size() * ids_.size(), 0.0) {}

GainMatrix gain_matrix(const AudioZone& zone, const std::map<std::string, Vec3>& positions) {
  std::vector<std::string> ids;
  std::vector<Vec3> points;
  for (const auto& [id, p] : positions) {
    if (!is_finite(p)) throw std::invalid_argument("position of '" + id + "' is not finite");
    ids.push_back(id);
    points.push_back(p);
  }
  GainMatrix m(std::move(ids));
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const double g = gain(zone, distance(points[i], points[j]));
      m.set(i, j, g);
      m.set(j, i, g);
    }
  }
  return m;
}

double privacy_radius(const AudioZone& zone) {
  if (zone.coef >= 1.0) {
    throw Error(ErrorCode::NoPrivacy, "coef = 1 never attenuates below epsilon");
  }
  // log2 keeps power-of-two parameters exact: a = 1/2, eps = 2^-6 gives 2^6.
  double radius = zone.ref_distance * std::exp2(std::log2(zone.epsilon) / std::log2(zone.coef));
  while (gain(zone, radius) > zone.epsilon) {
    radius = std::nextafter(radius, std::numeric_limits<double>::infinity());
  }
  return radius;
}

PrivacyReport check_group_privacy(const AudioZone& zone,
                                  const std::map<std::string, std::string>& groups,
                                  const std::map<std::string, Vec3>& positions) {
  PrivacyReport report;
  report.radius = privacy_radius(zone);

  std::map<std::string, std::vector<Vec3>> members;
  for (const auto& [client, label] : groups) {
    auto it = positions.find(client);
    if (it == positions.end()) {
      throw std::invalid_argument("grouped client '" + client + "' has no position");
    }
    members[label].push_back(it->second);
  }

  for (auto a = members.begin(); a != members.end(); ++a) {
    for (auto b = std::next(a); b != members.end(); ++b) {
      GroupPairPrivacy pair{a->first, b->first, true,
                            std::numeric_limits<double>::infinity(), 0.0};
      for (const auto& p : a->second) {
        for (const auto& q : b->second) {
          const double d = distance(p, q);
          pair.min_distance = std::min(pair.min_distance, d);
          pair.max_cross_gain = std::max(pair.max_cross_gain, gain(zone, d));
        }
      }
      pair.is_private = pair.max_cross_gain <= zone.epsilon;
      report.pairs.push_back(std::move(pair));
    }
  }
  return report;
}

Json to_json(const GainMatrix& matrix) {
  Json rows = Json::array();
  for (std::size_t l = 0; l < matrix.size(); ++l) {
    Json row = Json::array();
    for (std::size_t s = 0; s < matrix.size(); ++s) row.push_back(matrix.at(l, s));
    rows.push_back(std::move(row));
  }
  return {{"ids", matrix.ids()}, {"gain", std::move(rows)}};
}

Json to_json(const PrivacyReport& report) {
  Json pairs = Json::array();
  for (const auto& p : report.pairs) {
    pairs.push_back({{"group_a", p.group_a},
                     {"group_b", p.group_b},
                     {"private", p.is_private},
                     {"min_distance", p.min_distance},
                     {"max_cross_gain", p.max_cross_gain}});
  }
  return {{"privacy_radius", report.radius}, {"pairs", std::move(pairs)}};
}

}  // namespace veld
