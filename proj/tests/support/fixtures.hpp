#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "coqforge/cleaner.hpp"
#include "coqforge/core.hpp"

namespace coqforge::testing {

// Demo corpus: 50 ten-doctor-turn consultations, 231 of the 500 doctor turns
// are questions. Nine conversations carry strip-only noise.
inline constexpr std::size_t kDemoConversations = 50;
inline constexpr std::size_t kDemoDoctorTurns = 500;
inline constexpr std::size_t kDemoQuestions = 231;
inline constexpr std::size_t kDemoNoisyConversations = 9;

std::vector<Conversation> demo_corpus();

struct NoiseExemplar {
  NoiseCategory category;
  std::string text;
  /// Only noise when it is the entire utterance (e.g. a bare "null").
  bool whole_utterance_only = false;
};

/// Every exemplar injected into noise_corpus(), at least one per category.
const std::vector<NoiseExemplar>& noise_exemplars();
/// One or more conversations per noise category with the exemplars above
/// embedded in otherwise clean consultations.
std::vector<Conversation> noise_corpus();

/// Directory holding the bundled data files (data/ in the source tree).
std::filesystem::path data_dir();

struct FuzzOptions {
  std::size_t max_utterances = 12;
  std::size_t max_text = 30;
  /// Probability of one utterance being long enough to force truncation.
  double long_text_probability = 0.0;
  std::size_t long_text_min = 400;
  std::size_t long_text_max = 2400;
};

/// Random valid conversation. Texts mix CJK, ASCII, full-width punctuation
/// and role-prefix look-alikes, never newlines.
Conversation random_conversation(std::mt19937_64& rng, std::size_t index,
                                 const FuzzOptions& options = {});

/// Random token sequence of length [0, max_length] over `alphabet` symbols
/// named "a", "b", ...
std::vector<std::string> random_tokens(std::mt19937_64& rng, std::size_t max_length,
                                       std::size_t alphabet);

/// Synthetic conversation #i for scale tests; cheap and deterministic.
Conversation synthetic_conversation(std::size_t i);

}  // namespace coqforge::testing
