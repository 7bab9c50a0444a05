#include "coqforge/core.hpp"

#include <algorithm>

#include "coqforge/utf8.hpp"

namespace coqforge {

std::string_view to_string(Speaker speaker) {
  return speaker == Speaker::Patient ? "patient" : "doctor";
}

std::optional<Speaker> parse_speaker(std::string_view name) {
  if (name == "patient") return Speaker::Patient;
  if (name == "doctor") return Speaker::Doctor;
  return std::nullopt;
}

std::string_view role_prefix(Speaker speaker) {
  return speaker == Speaker::Patient ? kPatientPrefix : kDoctorPrefix;
}

std::string_view to_string(AnswerKind kind) {
  return kind == AnswerKind::Question ? "question" : "suggestion";
}

std::size_t Conversation::doctor_turns() const {
  return static_cast<std::size_t>(
      std::count_if(utterances.begin(), utterances.end(),
                    [](const Utterance& u) { return u.speaker == Speaker::Doctor; }));
}

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_break = false;
  for (char c : text) {
    if (c == '\n' || c == '\r') {
      if (!in_break) out.push_back(' ');
      in_break = true;
      continue;
    }
    in_break = false;
    out.push_back(c);
  }
  return utf8::trim(out);
}

std::string to_fullwidth_punctuation(std::string_view text) {
  if (!utf8::contains_cjk(text)) return std::string(text);
  const auto cps = utf8::decode(text);
  std::u32string out;
  out.reserve(cps.size());
  auto is_digit = [](char32_t c) { return c >= U'0' && c <= U'9'; };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t c = cps[i];
    const bool between_digits = i > 0 && i + 1 < cps.size() &&
                                is_digit(cps[i - 1]) && is_digit(cps[i + 1]);
    switch (c) {
      case U',': out.push_back(between_digits ? c : U'，'); break;
      case U':': out.push_back(between_digits ? c : U'：'); break;
      case U'?': out.push_back(U'？'); break;
      case U'!': out.push_back(U'！'); break;
      case U';': out.push_back(U'；'); break;
      case U'(': out.push_back(U'（'); break;
      case U')': out.push_back(U'）'); break;
      default: out.push_back(c);
    }
  }
  return utf8::encode(out);
}

std::optional<std::string> validation_error(const Conversation& conv) {
  if (conv.utterances.size() < 2) return "fewer than two utterances";
  if (conv.utterances.front().speaker != Speaker::Patient)
    return "first utterance is not from the patient";
  bool has_doctor = false;
  for (std::size_t i = 0; i < conv.utterances.size(); ++i) {
    const auto& u = conv.utterances[i];
    if (u.text.find('\n') != std::string::npos || u.text.find('\r') != std::string::npos)
      return "utterance " + std::to_string(i) + " contains a newline";
    if (utf8::is_blank(u.text)) return "utterance " + std::to_string(i) + " is empty";
    if (i > 0 && conv.utterances[i - 1].speaker == u.speaker)
      return "utterances " + std::to_string(i - 1) + " and " + std::to_string(i) +
             " share a speaker";
    has_doctor = has_doctor || u.speaker == Speaker::Doctor;
  }
  if (!has_doctor) return "no doctor utterance";
  return std::nullopt;
}

std::optional<Conversation> repair(Conversation conv) {
  std::vector<Utterance> merged;
  merged.reserve(conv.utterances.size());
  for (auto& u : conv.utterances) {
    std::string text = normalize_text(u.text);
    if (text.empty()) continue;
    if (!merged.empty() && merged.back().speaker == u.speaker) {
      merged.back().text += ' ';
      merged.back().text += text;
    } else {
      merged.push_back({u.speaker, std::move(text)});
    }
  }
  conv.utterances = std::move(merged);
  if (!is_valid(conv)) return std::nullopt;
  return conv;
}

}  // namespace coqforge
