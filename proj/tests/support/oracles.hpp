#pragma once

// Reference models written independently of the library, used to derive the
// expected values the tests freeze.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "veld/audio.hpp"
#include "veld/error.hpp"
#include "veld/geometry.hpp"
#include "veld/state.hpp"

namespace veld::oracle {

inline constexpr std::uint32_t kMaxDeck = 12;

struct SlideOutcome {
  SlideShowState after;
  std::optional<ErrorCode> error;
};

enum class SlideStep { Next, Prev, Goto, Select };

// Deck navigation by case analysis; `arg` is the GOTO index or the new deck
// length for Select.
SlideOutcome slides(const SlideShowState& before, SlideStep step, std::uint32_t arg);

/// Every SlideShowState with deck_length <= kMaxDeck, including "no deck".
std::vector<SlideShowState> all_slide_states();

enum class FaceOffStep { Prompt, Finish, Reveal, AwardOccupant, AwardStranger, Reset };

struct FaceOffOutcome {
  FaceOffState after;
  std::optional<ErrorCode> error;
};

// Transition table for the quiz game. `student` is the award target and
// `prompt` the id used by Prompt.
FaceOffOutcome faceoff(const FaceOffState& before, FaceOffStep step, const std::string& student,
                       const std::string& prompt);

/// One representative state per phase, with a score already on the board.
std::vector<FaceOffState> faceoff_representatives(const std::string& student);

struct PairPrivacy {
  std::string group_a;
  std::string group_b;
  bool is_private = false;
  double max_cross_gain = 0.0;
  double min_distance = 0.0;
};

// Evaluates every cross-group (listener, speaker) gain directly.
std::vector<PairPrivacy> brute_privacy(const AudioZone& zone,
                                       const std::map<std::string, std::string>& groups,
                                       const std::map<std::string, Vec3>& positions);

/// Plain pow/log2 form of the gain curve.
double reference_gain(const AudioZone& zone, double d);

// Applies actions in order, giving consecutive seqs to the accepted ones and
// skipping the rejected ones, like the server's sequencer does.
RoomState replay_accepted(RoomState state, const std::vector<ActionEnvelope>& actions,
                          std::uint64_t first_seq = 1);

/// A random action over every registered kind, a share of them invalid.
ActionEnvelope random_action(std::mt19937_64& rng, const std::string& room,
                             const std::vector<std::string>& occupants,
                             const std::vector<std::string>& apps);

/// Random RoomState satisfying every invariant.
RoomState random_room(std::mt19937_64& rng);

}  // namespace veld::oracle
