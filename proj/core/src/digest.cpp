#include "veld/digest.hpp"

#include <array>
#include <stdexcept>

#include <openssl/evp.h>

namespace veld {

std::string canonical_serialize(const RoomState& state) {
  return to_json(state).dump(-1, ' ', false, Json::error_handler_t::strict);
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0x0f]);
  }
  return out;
}

StateDigest digest(const RoomState& state) {
  return StateDigest{sha256_hex(canonical_serialize(state))};
}

SnapshotMessage make_snapshot(const RoomState& state, std::uint64_t last_seq) {
  return SnapshotMessage{state.room_id, last_seq, to_json(state)};
}

RoomState restore_snapshot(const SnapshotMessage& snapshot) {
  return room_state_from_json(snapshot.state);
}

}  // namespace veld
