#include "veld/survey.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "veld/error.hpp"

namespace veld {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

// Calls fn(line_number, fields) for each data row after checking the header.
template <class Fn>
void for_each_row(std::string_view text, const std::vector<std::string_view>& header, Fn fn) {
  std::size_t line_no = 0;
  bool saw_header = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    auto fields = split(line);
    if (!saw_header) {
      if (fields != header) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": unexpected header");
      }
      saw_header = true;
      continue;
    }
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                             std::to_string(header.size()) + " fields");
    }
    fn(line_no, fields);
  }
  if (!saw_header) throw Error(ErrorCode::ParseError, "missing header");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Json fraction_json(const Fraction& f) {
  return {{"num", f.num}, {"den", f.den}, {"value", f.value()}, {"label", label(f)}};
}

}  // namespace

std::string_view to_string(Mode mode) { return mode == Mode::VR ? "VR" : "Desktop"; }

Mode mode_from_string(std::string_view text) {
  const std::string m = lower(text);
  if (m == "vr") return Mode::VR;
  if (m == "desktop") return Mode::Desktop;
  throw Error(ErrorCode::InvalidResponse, "unknown mode '" + std::string(text) + "'");
}

std::string label(const Fraction& f) {
  // Round half up on the exact rational, in hundredths.
  const std::uint64_t hundredths = (200 * f.num + f.den) / (2 * f.den);
  std::string out = std::to_string(hundredths / 100);
  std::uint64_t frac = hundredths % 100;
  if (frac != 0) {
    std::string digits = (frac < 10 ? "0" : "") + std::to_string(frac);
    if (digits.back() == '0') digits.pop_back();
    out += "." + digits;
  }
  return out;
}

Json DistributionSummary::to_json() const {
  Json props = Json::object();
  for (const auto& [rating, f] : proportions) props[std::to_string(rating)] = fraction_json(f);
  return {{"question_id", question_id},
          {"mode", std::string(to_string(mode))},
          {"n", n},
          {"proportions", std::move(props)}};
}

Json PairedShift::to_json() const {
  return {{"question_id", question_id},
          {"deltas", deltas},
          {"positive", positive},
          {"zero", zero},
          {"negative", negative}};
}

void validate(const std::vector<LikertResponse>& responses) {
  std::set<std::tuple<std::string, Mode, std::string>> seen;
  for (const auto& r : responses) {
    if (r.rating < 1 || r.rating > 5) {
      throw Error(ErrorCode::InvalidResponse,
                  "rating " + std::to_string(r.rating) + " for " + r.subject_id + " is outside 1..5");
    }
    if (r.subject_id.empty() || r.question_id.empty()) {
      throw Error(ErrorCode::InvalidResponse, "empty subject or question id");
    }
    if (!seen.emplace(r.subject_id, r.mode, r.question_id).second) {
      throw Error(ErrorCode::InvalidResponse, "duplicate response: " + r.subject_id + "/" +
                                                  std::string(to_string(r.mode)) + "/" +
                                                  r.question_id);
    }
  }
}

DistributionSummary summarize(const std::vector<LikertResponse>& responses,
                              std::string_view question_id, Mode mode) {
  DistributionSummary s;
  s.question_id = std::string(question_id);
  s.mode = mode;
  std::map<int, std::uint64_t> counts;
  for (const auto& r : responses) {
    if (r.question_id == question_id && r.mode == mode) {
      ++counts[r.rating];
      ++s.n;
    }
  }
  if (s.n == 0) {
    throw Error(ErrorCode::NoData, "no " + std::string(to_string(mode)) + " responses for '" +
                                       std::string(question_id) + "'");
  }
  for (const auto& [rating, k] : counts) s.proportions[rating] = Fraction{k, s.n};
  return s;
}

PairedShift paired_shift(const std::vector<LikertResponse>& responses,
                         std::string_view question_id) {
  std::map<std::string, std::map<Mode, int>> by_subject;
  for (const auto& r : responses) {
    if (r.question_id == question_id) by_subject[r.subject_id][r.mode] = r.rating;
  }
  if (by_subject.empty()) {
    throw Error(ErrorCode::NoData, "no responses for '" + std::string(question_id) + "'");
  }
  PairedShift out;
  out.question_id = std::string(question_id);
  for (const auto& [subject, modes] : by_subject) {
    if (modes.size() != 2) {
      throw Error(ErrorCode::UnpairedSubject,
                  subject + " lacks a " +
                      std::string(to_string(modes.count(Mode::VR) ? Mode::Desktop : Mode::VR)) +
                      " response");
    }
    const int delta = modes.at(Mode::VR) - modes.at(Mode::Desktop);
    out.deltas[subject] = delta;
    if (delta > 0) {
      ++out.positive;
    } else if (delta == 0) {
      ++out.zero;
    } else {
      ++out.negative;
    }
  }
  return out;
}

Fraction preference_rate(const std::map<std::string, Mode>& preferences) {
  if (preferences.empty()) throw Error(ErrorCode::NoData, "no preferences");
  const auto vr = static_cast<std::uint64_t>(std::count_if(
      preferences.begin(), preferences.end(), [](const auto& p) { return p.second == Mode::VR; }));
  return Fraction{vr, preferences.size()};
}

std::vector<LikertResponse> parse_responses_csv(std::string_view text) {
  std::vector<LikertResponse> out;
  for_each_row(text, {"subject_id", "mode", "question_id", "rating"},
               [&](std::size_t line_no, const std::vector<std::string_view>& f) {
                 int rating = 0;
                 auto [ptr, ec] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), rating);
                 if (ec != std::errc() || ptr != f[3].data() + f[3].size()) {
                   throw Error(ErrorCode::InvalidResponse,
                               "line " + std::to_string(line_no) + ": rating is not an integer");
                 }
                 out.push_back(LikertResponse{std::string(f[0]), mode_from_string(f[1]),
                                              std::string(f[2]), rating});
               });
  validate(out);
  return out;
}

std::vector<LikertResponse> load_responses_file(const std::string& path) {
  return parse_responses_csv(read_file(path));
}

std::map<std::string, SubjectRecord> parse_subjects_csv(std::string_view text) {
  std::map<std::string, SubjectRecord> out;
  for_each_row(text, {"subject_id", "preferred_mode", "felt_dizzy"},
               [&](std::size_t line_no, const std::vector<std::string_view>& f) {
                 const std::string dizzy = lower(f[2]);
                 if (dizzy != "true" && dizzy != "false") {
                   throw Error(ErrorCode::InvalidResponse,
                               "line " + std::to_string(line_no) + ": felt_dizzy must be true/false");
                 }
                 if (f[0].empty()) {
                   throw Error(ErrorCode::InvalidResponse,
                               "line " + std::to_string(line_no) + ": empty subject id");
                 }
                 auto [it, fresh] = out.emplace(
                     std::string(f[0]), SubjectRecord{mode_from_string(f[1]), dizzy == "true"});
                 if (!fresh) {
                   throw Error(ErrorCode::InvalidResponse, "duplicate subject " + it->first);
                 }
               });
  return out;
}

std::map<std::string, SubjectRecord> load_subjects_file(const std::string& path) {
  return parse_subjects_csv(read_file(path));
}

Json survey_report(const std::vector<LikertResponse>& responses, std::string_view question_id) {
  Json modes = Json::object();
  for (Mode m : {Mode::Desktop, Mode::VR}) {
    try {
      modes[std::string(to_string(m))] = summarize(responses, question_id, m).to_json();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoData) throw;
    }
  }
  if (modes.empty()) {
    throw Error(ErrorCode::NoData, "no responses for '" + std::string(question_id) + "'");
  }
  Json report = {{"question_id", std::string(question_id)}, {"modes", std::move(modes)}};
  try {
    report["paired_shift"] = paired_shift(responses, question_id).to_json();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::UnpairedSubject) throw;
    report["paired_shift"] = nullptr;
  }
  return report;
}

}  // namespace veld
