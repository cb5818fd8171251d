#include "veld/replica.hpp"

#include <algorithm>

namespace veld {

void Replica::load_snapshot(const SnapshotMessage& snapshot) {
  state_ = restore_snapshot(snapshot);
  snapshot_seq_ = last_seq_ = snapshot.last_seq;
  has_snapshot_ = true;
}

Replica::EventResult Replica::apply_event(const ActionEnvelope& event) {
  EventResult result;
  const std::uint64_t seq = event.seq.value_or(0);
  if (seq <= last_seq_) {
    result.out_of_order = true;
    ++divergences_;
    return result;
  }
  result.gap = seq - last_seq_ - 1;
  max_gap_ = std::max(max_gap_, result.gap);
  last_seq_ = seq;

  result.relevant = is_relevant(event, binding_);
  if (!result.relevant) return result;
  auto applied = apply_action(state_, event);
  if (!applied.ok()) {
    result.error = applied.error;
    ++divergences_;
    return result;
  }
  state_ = std::move(applied.state);
  return result;
}

void Replica::on_join(const std::string& client_id) {
  state_ = with_occupant(std::move(state_), client_id);
}

void Replica::on_leave(const std::string& client_id) {
  state_ = without_occupant(std::move(state_), client_id);
}

}  // namespace veld
