#pragma once

#include <cstdint>
#include <optional>

#include "veld/digest.hpp"
#include "veld/reducer.hpp"

namespace veld {

/// Client-side mirror of one room: seeded from a SNAPSHOT, then advanced by
/// EVENTs in seq order. Events for other display apps advance the sequence
/// but are not applied, so only the projected view stays comparable with
/// the server.
class Replica {
 public:
  explicit Replica(DisplayBinding binding) : binding_(std::move(binding)) {}

  void load_snapshot(const SnapshotMessage& snapshot);

  struct EventResult {
    bool relevant = false;
    std::uint64_t gap = 0;       // seqs skipped before this one
    bool out_of_order = false;   // seq <= last applied
    std::optional<ActionError> error;
  };
  EventResult apply_event(const ActionEnvelope& event);

  void on_join(const std::string& client_id);
  void on_leave(const std::string& client_id);

  bool has_snapshot() const { return has_snapshot_; }
  const DisplayBinding& binding() const { return binding_; }
  const RoomState& state() const { return state_; }
  std::uint64_t last_seq() const { return last_seq_; }
  std::uint64_t snapshot_seq() const { return snapshot_seq_; }
  std::uint64_t max_gap() const { return max_gap_; }
  std::uint64_t divergences() const { return divergences_; }

  RoomState view() const { return project_view(state_, binding_); }
  StateDigest view_digest() const { return digest(view()); }

 private:
  DisplayBinding binding_;
  RoomState state_;
  bool has_snapshot_ = false;
  std::uint64_t snapshot_seq_ = 0;
  std::uint64_t last_seq_ = 0;
  std::uint64_t max_gap_ = 0;
  std::uint64_t divergences_ = 0;
};

}  // namespace veld
