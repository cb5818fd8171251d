#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "veld/state.hpp"

namespace veld {

/// Lowercase hex SHA-256 of a room's canonical serialization.
struct StateDigest {
  std::string hex;

  bool operator==(const StateDigest&) const = default;
  auto operator<=>(const StateDigest&) const = default;
};

/// UTF-8 JSON, keys in lexicographic order, no insignificant whitespace.
std::string canonical_serialize(const RoomState& state);

std::string sha256_hex(std::string_view bytes);

StateDigest digest(const RoomState& state);

struct SnapshotMessage {
  std::string room_id;
  std::uint64_t last_seq = 0;
  Json state;
};

SnapshotMessage make_snapshot(const RoomState& state, std::uint64_t last_seq);

/// What a fresh client reconstructs from a snapshot.
RoomState restore_snapshot(const SnapshotMessage& snapshot);

}  // namespace veld
