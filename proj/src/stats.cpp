#include "coqforge/stats.hpp"

namespace coqforge {

void CorpusStats::add(const Conversation& conv, const AnswerClassifier& classifier) {
  ++n_conversations;
  n_utterances += conv.utterances.size();
  ++turn_count_histogram[conv.utterances.size()];
  for (const auto& u : conv.utterances) {
    if (u.speaker != Speaker::Doctor) continue;
    ++n_doctor_turns;
    if (classifier.classify(u.text) == AnswerKind::Question) ++n_question_turns;
  }
}

void CorpusStats::merge(const CorpusStats& other) {
  n_conversations += other.n_conversations;
  n_utterances += other.n_utterances;
  n_doctor_turns += other.n_doctor_turns;
  n_question_turns += other.n_question_turns;
  for (const auto& [turns, count] : other.turn_count_histogram) turn_count_histogram[turns] += count;
}

double CorpusStats::question_fraction() const {
  if (empty()) return 0.0;
  return static_cast<double>(n_question_turns) / static_cast<double>(n_doctor_turns);
}

double CorpusStats::suggestion_fraction() const {
  if (empty()) return 0.0;
  return 1.0 - question_fraction();
}

nlohmann::ordered_json CorpusStats::to_json() const {
  nlohmann::ordered_json histogram = nlohmann::ordered_json::object();
  for (const auto& [turns, count] : turn_count_histogram) histogram[std::to_string(turns)] = count;
  return {
      {"empty", empty()},
      {"n_conversations", n_conversations},
      {"n_utterances", n_utterances},
      {"n_doctor_turns", n_doctor_turns},
      {"n_samples_all_doctor_turns", n_doctor_turns},
      {"n_question_turns", n_question_turns},
      {"question_fraction", question_fraction()},
      {"suggestion_fraction", suggestion_fraction()},
      {"turn_count_histogram", std::move(histogram)},
  };
}

}  // namespace coqforge
