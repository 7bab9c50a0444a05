#pragma once

// Conversation -> (input, target) fine-tuning pairs.
//
// Input grammar, one line per context turn and a bare doctor prompt last:
//
//   病人：<text>\n医生：<text>\n ... 病人：<text>\n医生：
//
// i.e. it always matches ^病人：[^\n]*\n(医生：[^\n]*\n病人：[^\n]*\n)*医生：$.

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coqforge/core.hpp"
#include "json.hpp"

namespace coqforge {

struct TrainingSample {
  std::string input;
  std::string target;
  std::string conversation_id;
  std::size_t turn_index = 0;

  friend bool operator==(const TrainingSample&, const TrainingSample&) = default;
};

/// Counts length units in a string. The default counts code points; plug in
/// a tokenizer to budget in model tokens.
using UnitCounter = std::function<std::size_t(std::string_view)>;

std::size_t count_code_points(std::string_view text);

struct LengthBudget {
  std::size_t max_input_units = 1536;
  std::size_t max_target_units = 512;
  UnitCounter counter = count_code_points;

  /// Throws ConfigError unless both maxima are positive.
  void validate() const;
};

struct TurnPair {
  std::span<const Utterance> context;
  const Utterance* target = nullptr;
  std::size_t target_index = 0;
};

/// One pair per doctor utterance i, with context utterances[0, i).
std::vector<TurnPair> expand_conversation(const Conversation& conv);

/// Renders a patient-first context and appends the trailing "\n医生：".
/// Throws ArgumentError when the context is empty or starts with the doctor.
std::string build_input(std::span<const Utterance> context);

/// Inverse of build_input: recovers the context, or std::nullopt when the
/// string does not follow the grammar.
std::optional<std::vector<Utterance>> parse_input(std::string_view input);

/// True when `input` matches the grammar above exactly.
bool matches_input_grammar(std::string_view input);

enum class TruncateOutcome { Unchanged, Truncated, Skipped };

struct TruncateResult {
  TruncateOutcome outcome = TruncateOutcome::Unchanged;
  std::string input;
  std::string target;
};

/// Drops whole turns from the front of `input` (a leading patient+doctor
/// pair at a time) until it fits, keeping the newest patient turn and the
/// trailing doctor prompt; hard-truncates `target`. Skipped when even the
/// newest patient turn alone is over budget. Truncated inputs are always a
/// suffix of the original.
TruncateResult truncate(std::string_view input, std::string_view target,
                        const LengthBudget& budget);

enum class ExpansionPolicy { AllDoctorTurns, FinalTurnOnly };

ExpansionPolicy parse_expansion_policy(std::string_view name);

struct SerializeReport {
  std::size_t conversations = 0;
  std::size_t samples = 0;
  std::size_t truncated = 0;
  std::size_t target_truncated = 0;
  std::size_t skipped_over_budget = 0;

  void merge(const SerializeReport& other);
  nlohmann::ordered_json to_json() const;
};

/// Expands, builds and truncates every sample of one conversation.
std::vector<TrainingSample> serialize_conversation(const Conversation& conv,
                                                   const LengthBudget& budget,
                                                   ExpansionPolicy policy,
                                                   SerializeReport& report);

/// {"input": ..., "target": ...} with no trailing newline.
std::string training_jsonl(const TrainingSample& sample);

/// {"id": "<conversation>#<turn>", "input": ..., "target": ...}; doubles as
/// a reference file for evaluation.
std::string eval_jsonl(const TrainingSample& sample);

class TrainingWriter {
 public:
  explicit TrainingWriter(const std::filesystem::path& path);
  void write(const TrainingSample& sample);
  void close();
  std::size_t count() const { return count_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t count_ = 0;
};

std::size_t write_training_file(const std::vector<TrainingSample>& samples,
                                const std::filesystem::path& path);

}  // namespace coqforge
