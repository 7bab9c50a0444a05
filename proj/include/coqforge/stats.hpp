#pragma once

#include <cstddef>
#include <map>

#include "coqforge/classifier.hpp"
#include "coqforge/core.hpp"
#include "json.hpp"

namespace coqforge {

/// Corpus-level answer statistics. Accumulation is a commutative monoid:
/// partial stats from shards combine with merge() in any order.
struct CorpusStats {
  std::size_t n_conversations = 0;
  std::size_t n_utterances = 0;
  /// Also the number of (context, target) samples produced by expanding every
  /// doctor turn.
  std::size_t n_doctor_turns = 0;
  std::size_t n_question_turns = 0;
  /// Utterance count per conversation -> number of conversations.
  std::map<std::size_t, std::size_t> turn_count_histogram;

  void add(const Conversation& conv, const AnswerClassifier& classifier);
  void merge(const CorpusStats& other);

  bool empty() const { return n_doctor_turns == 0; }
  double question_fraction() const;
  /// Always 1 - question_fraction() for non-empty stats; 0 when empty.
  double suggestion_fraction() const;

  nlohmann::ordered_json to_json() const;

  friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

template <typename Range>
CorpusStats corpus_stats(const Range& convs, const AnswerClassifier& classifier) {
  CorpusStats stats;
  for (const auto& conv : convs) stats.add(conv, classifier);
  return stats;
}

}  // namespace coqforge
