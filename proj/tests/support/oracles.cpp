#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "veld/reducer.hpp"

namespace veld::oracle {

SlideOutcome slides(const SlideShowState& before, SlideStep step, std::uint32_t arg) {
  const bool has_deck = before.deck_id.has_value();
  const std::uint32_t len = before.deck_length;
  const std::uint32_t idx = before.slide_index;
  switch (step) {
    case SlideStep::Select:
      if (arg == 0) return {before, ErrorCode::InvalidPayload};
      return {SlideShowState{"deck-new", 0, arg}, std::nullopt};
    case SlideStep::Next:
      if (!has_deck) return {before, ErrorCode::IllegalTransition};
      return {SlideShowState{before.deck_id, idx == len - 1 ? idx : idx + 1, len}, std::nullopt};
    case SlideStep::Prev:
      if (!has_deck) return {before, ErrorCode::IllegalTransition};
      return {SlideShowState{before.deck_id, idx == 0 ? 0u : idx - 1, len}, std::nullopt};
    case SlideStep::Goto:
      if (!has_deck || arg >= len) return {before, ErrorCode::IllegalTransition};
      return {SlideShowState{before.deck_id, arg, len}, std::nullopt};
  }
  return {before, ErrorCode::UnknownKind};
}

std::vector<SlideShowState> all_slide_states() {
  std::vector<SlideShowState> out{SlideShowState{}};
  for (std::uint32_t len = 1; len <= kMaxDeck; ++len) {
    for (std::uint32_t idx = 0; idx < len; ++idx) out.push_back(SlideShowState{"deck", idx, len});
  }
  return out;
}

namespace {

using P = FaceOffPhase;
using S = FaceOffStep;

// What each (phase, step) pair does. `to` empty means IllegalTransition.
struct Row {
  P from;
  S step;
  std::optional<P> to;
  int round_delta;
  bool award;
};

constexpr Row kTable[] = {
    {P::Lobby, S::Prompt, P::PromptShown, 1, false},
    {P::Lobby, S::Finish, std::nullopt, 0, false},
    {P::Lobby, S::Reveal, std::nullopt, 0, false},
    {P::Lobby, S::AwardOccupant, std::nullopt, 0, false},
    {P::Lobby, S::AwardStranger, std::nullopt, 0, false},
    {P::Lobby, S::Reset, P::Lobby, 0, false},

    {P::PromptShown, S::Prompt, P::PromptShown, 1, false},
    {P::PromptShown, S::Finish, P::Finished, 0, false},
    {P::PromptShown, S::Reveal, P::Revealed, 0, false},
    {P::PromptShown, S::AwardOccupant, std::nullopt, 0, false},
    {P::PromptShown, S::AwardStranger, std::nullopt, 0, false},
    {P::PromptShown, S::Reset, P::Lobby, 0, false},

    {P::Revealed, S::Prompt, P::PromptShown, 1, false},
    {P::Revealed, S::Finish, P::Finished, 0, false},
    {P::Revealed, S::Reveal, std::nullopt, 0, false},
    {P::Revealed, S::AwardOccupant, P::Revealed, 0, true},
    {P::Revealed, S::AwardStranger, std::nullopt, 0, false},
    {P::Revealed, S::Reset, P::Lobby, 0, false},

    {P::Finished, S::Prompt, std::nullopt, 0, false},
    {P::Finished, S::Finish, std::nullopt, 0, false},
    {P::Finished, S::Reveal, std::nullopt, 0, false},
    {P::Finished, S::AwardOccupant, std::nullopt, 0, false},
    {P::Finished, S::AwardStranger, std::nullopt, 0, false},
    {P::Finished, S::Reset, P::Lobby, 0, false},
};

}  // namespace

FaceOffOutcome faceoff(const FaceOffState& before, FaceOffStep step, const std::string& student,
                       const std::string& prompt) {
  const Row* row = nullptr;
  for (const auto& r : kTable) {
    if (r.from == before.phase && r.step == step) row = &r;
  }
  if (!row || !row->to) return {before, ErrorCode::IllegalTransition};
  if (step == S::Reset) return {FaceOffState{}, std::nullopt};

  FaceOffState after = before;
  after.phase = *row->to;
  after.round += row->round_delta;
  if (after.phase == P::PromptShown && step == S::Prompt) after.prompt_id = prompt;
  if (after.phase == P::Finished) after.prompt_id.reset();
  if (row->award) after.scores[student] += 1;
  return {after, std::nullopt};
}

std::vector<FaceOffState> faceoff_representatives(const std::string& student) {
  return {
      FaceOffState{},
      FaceOffState{P::PromptShown, 3, "q3", {{student, 2}}},
      FaceOffState{P::Revealed, 2, "q2", {{student, 1}}},
      FaceOffState{P::Finished, 5, std::nullopt, {{student, 4}}},
  };
}

double reference_gain(const AudioZone& zone, double d) {
  if (d <= zone.ref_distance) return 1.0;
  return std::pow(zone.coef, std::log2(d / zone.ref_distance));
}

std::vector<PairPrivacy> brute_privacy(const AudioZone& zone,
                                       const std::map<std::string, std::string>& groups,
                                       const std::map<std::string, Vec3>& positions) {
  std::set<std::string> labels;
  for (const auto& [_, g] : groups) labels.insert(g);
  std::vector<PairPrivacy> out;
  for (auto a = labels.begin(); a != labels.end(); ++a) {
    for (auto b = std::next(a); b != labels.end(); ++b) {
      PairPrivacy p{*a, *b, true, 0.0, std::numeric_limits<double>::infinity()};
      for (const auto& [listener, gl] : groups) {
        for (const auto& [speaker, gs] : groups) {
          const bool cross = (gl == *a && gs == *b) || (gl == *b && gs == *a);
          if (!cross) continue;
          const Vec3 u = positions.at(listener);
          const Vec3 v = positions.at(speaker);
          const double d = std::hypot(u.x - v.x, u.y - v.y, u.z - v.z);
          const double g = gain(zone, d);
          p.max_cross_gain = std::max(p.max_cross_gain, g);
          p.min_distance = std::min(p.min_distance, d);
          if (g > zone.epsilon) p.is_private = false;
        }
      }
      out.push_back(p);
    }
  }
  return out;
}

RoomState replay_accepted(RoomState state, const std::vector<ActionEnvelope>& actions,
                          std::uint64_t first_seq) {
  std::uint64_t seq = first_seq;
  for (ActionEnvelope a : actions) {
    a.seq = seq;
    auto r = apply_action(state, a);
    if (r.ok()) {
      state = std::move(r.state);
      ++seq;
    }
  }
  return state;
}

ActionEnvelope random_action(std::mt19937_64& rng, const std::string& room,
                             const std::vector<std::string>& occupants,
                             const std::vector<std::string>& apps) {
  std::uniform_int_distribution<int> pick(0, 15);
  std::uniform_int_distribution<std::uint32_t> small(0, 14);
  auto any_occupant = [&]() -> std::string {
    if (occupants.empty()) return "nobody";
    return occupants[std::uniform_int_distribution<std::size_t>(0, occupants.size() - 1)(rng)];
  };
  ActionEnvelope a;
  a.room_id = room;
  a.actor_id = "actor";
  switch (pick(rng)) {
    case 0:
      a.app_id = "slides", a.kind = "SELECT_DECK";
      a.payload = {{"deck_id", "d" + std::to_string(small(rng))}, {"deck_length", small(rng)}};
      break;
    case 1:
      a.app_id = "slides", a.kind = "NEXT_SLIDE";
      break;
    case 2:
      a.app_id = "slides", a.kind = "PREV_SLIDE";
      break;
    case 3:
      a.app_id = "slides", a.kind = "GOTO_SLIDE", a.payload = {{"index", small(rng)}};
      break;
    case 4:
      a.app_id = "faceoff", a.kind = "NEXT_PROMPT";
      a.payload = {{"prompt_id", "p" + std::to_string(small(rng))}};
      break;
    case 5:
      a.app_id = "faceoff", a.kind = "NEXT_PROMPT", a.payload = {{"prompt_id", nullptr}};
      break;
    case 6:
      a.app_id = "faceoff", a.kind = "REVEAL";
      break;
    case 7:
      a.app_id = "faceoff", a.kind = "AWARD_POINT", a.payload = {{"student_id", any_occupant()}};
      break;
    case 8:
      a.app_id = "faceoff", a.kind = "RESET";
      break;
    case 9:
      a.app_id = "pods", a.kind = "LOCK";
      break;
    case 10:
      a.app_id = "pods", a.kind = "UNLOCK";
      break;
    case 11: {
      a.app_id = "groups", a.kind = "ASSIGN";
      Json m = Json::object();
      for (const auto& o : occupants) m[o] = "g" + std::to_string(small(rng) % 3);
      a.payload = {{"assignment", m}};
      break;
    }
    case 12:
      a.app_id = "groups", a.kind = "CLEAR";
      break;
    case 13:
      a.app_id = "slides", a.kind = "FOO";
      break;
    case 14:
      a.app_id = "slides", a.kind = "NEXT_SLIDE", a.payload = {{"extra", 1}};
      break;
    default:
      a.app_id = "groups", a.kind = "ASSIGN", a.payload = {{"assignment", {{"ghost", "g0"}}}};
      break;
  }
  if (a.app_id != "pods" && a.app_id != "groups" &&
      std::find(apps.begin(), apps.end(), a.app_id) == apps.end()) {
    a.app_id = apps.empty() ? "slides" : apps.front();
  }
  return a;
}

RoomState random_room(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<std::uint32_t> len(1, 40);
  RoomState s = make_room_state("room-" + std::to_string(rng() % 100), {"slides", "faceoff"});
  const int n = static_cast<int>(rng() % 6);
  for (int i = 0; i < n; ++i) s.occupants.insert("c" + std::to_string(rng() % 50));
  for (const auto& o : s.occupants) {
    if (coin(rng)) s.group_assignment[o] = "g" + std::to_string(rng() % 3);
    if (coin(rng)) s.pod_assignment[o] = "pod-" + std::to_string(rng() % 3);
  }
  s.pods_locked = coin(rng);
  if (coin(rng)) {
    const auto l = len(rng);
    s.apps["slides"] = SlideShowState{"deck-" + std::to_string(rng() % 10), static_cast<std::uint32_t>(rng() % l), l};
  }
  if (coin(rng) && !s.occupants.empty()) {
    FaceOffState f;
    f.phase = coin(rng) ? FaceOffPhase::PromptShown : FaceOffPhase::Revealed;
    f.round = 1 + static_cast<std::uint32_t>(rng() % 9);
    f.prompt_id = "p" + std::to_string(rng() % 9);
    f.scores[*s.occupants.begin()] = rng() % 5;
    s.apps["faceoff"] = f;
  }
  return s;
}

}  // namespace veld::oracle
