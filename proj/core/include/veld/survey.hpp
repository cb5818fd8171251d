#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "veld/state.hpp"

namespace veld {

enum class Mode { Desktop, VR };

std::string_view to_string(Mode mode);
/// Accepts "Desktop" / "VR" in any letter case. Throws Error(InvalidResponse).
Mode mode_from_string(std::string_view text);

struct LikertResponse {
  std::string subject_id;
  Mode mode = Mode::Desktop;
  std::string question_id;
  int rating = 3;  // 1 = strongly disagree .. 5 = strongly agree

  bool operator==(const LikertResponse&) const = default;
};

/// Exact k/n.
struct Fraction {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Fraction&) const = default;
};

// Two decimals with trailing zeros dropped: 2/7 -> "0.29", 7/7 -> "1".
std::string label(const Fraction& f);

struct DistributionSummary {
  std::string question_id;
  Mode mode = Mode::Desktop;
  std::uint64_t n = 0;
  std::map<int, Fraction> proportions;  // only ratings that occur

  Json to_json() const;
};

/// Throws Error(InvalidResponse) on a rating outside 1..5, an empty id, or a
/// repeated (subject, mode, question).
void validate(const std::vector<LikertResponse>& responses);

/// Throws Error(NoData) when nothing matches.
DistributionSummary summarize(const std::vector<LikertResponse>& responses,
                              std::string_view question_id, Mode mode);

struct PairedShift {
  std::string question_id;
  std::map<std::string, int> deltas;  // VR - Desktop per subject
  std::size_t positive = 0;
  std::size_t zero = 0;
  std::size_t negative = 0;

  Json to_json() const;
};

// Every subject answering the question must have answered it in both modes,
// otherwise Error(UnpairedSubject). Throws Error(NoData) if nobody did.
PairedShift paired_shift(const std::vector<LikertResponse>& responses,
                         std::string_view question_id);

/// Share of subjects preferring VR. Throws Error(NoData) on an empty map.
Fraction preference_rate(const std::map<std::string, Mode>& preferences);

// CSV with header `subject_id,mode,question_id,rating`. Lines starting with
// '#' and blank lines are skipped. Throws Error(ParseError) or, for bad
// values, Error(InvalidResponse).
std::vector<LikertResponse> parse_responses_csv(std::string_view text);
std::vector<LikertResponse> load_responses_file(const std::string& path);

struct SubjectRecord {
  Mode preferred_mode = Mode::VR;
  bool felt_dizzy = false;
};

/// CSV with header `subject_id,preferred_mode,felt_dizzy`.
std::map<std::string, SubjectRecord> parse_subjects_csv(std::string_view text);
std::map<std::string, SubjectRecord> load_subjects_file(const std::string& path);

/// Both modes for one question, plus paired_shift when every subject is paired.
Json survey_report(const std::vector<LikertResponse>& responses, std::string_view question_id);

}  // namespace veld
