#pragma once

// Domain model shared by every pipeline stage.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace coqforge {

enum class Speaker { Patient, Doctor };

/// "patient" / "doctor", the spelling used by the native corpus format.
std::string_view to_string(Speaker speaker);
std::optional<Speaker> parse_speaker(std::string_view name);

/// Role prefix used when a turn is rendered into model input.
std::string_view role_prefix(Speaker speaker);

inline constexpr std::string_view kPatientPrefix = "病人：";
inline constexpr std::string_view kDoctorPrefix = "医生：";

struct Utterance {
  Speaker speaker = Speaker::Patient;
  std::string text;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct Conversation {
  std::string id;
  std::vector<Utterance> utterances;
  std::string source;
  std::map<std::string, std::string> meta;

  std::size_t doctor_turns() const;

  friend bool operator==(const Conversation&, const Conversation&) = default;
};

enum class AnswerKind { Question, Suggestion };

std::string_view to_string(AnswerKind kind);

/// Replaces CR/LF runs with a single space and trims the result.
std::string normalize_text(std::string_view text);

/// Rewrites half-width , ? ! : ; ( ) to their full-width forms when the text
/// contains CJK characters. Colons and commas between two ASCII digits are
/// kept ("10:30", "1,000").
std::string to_fullwidth_punctuation(std::string_view text);

/// Why a conversation failed validation, or std::nullopt when it is valid.
std::optional<std::string> validation_error(const Conversation& conv);

inline bool is_valid(const Conversation& conv) {
  return !validation_error(conv).has_value();
}

/// Normalizes text, drops blank utterances and merges consecutive turns from
/// the same speaker with a single space. Returns the repaired conversation
/// only if it then satisfies every invariant: at least two utterances,
/// patient first, strict alternation, at least one doctor turn.
std::optional<Conversation> repair(Conversation conv);

}  // namespace coqforge
