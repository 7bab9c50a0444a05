#pragma once

// Stage-two cleaning: rewrite terse doctor suggestions with a chat model,
// keeping every question turn untouched.

#include <cstddef>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "coqforge/classifier.hpp"
#include "coqforge/core.hpp"
#include "coqforge/corpus_io.hpp"
#include "coqforge/llm_client.hpp"
#include "json.hpp"

namespace coqforge {

/// Prompt text with exactly one {history} and one {answer} placeholder.
class PromptTemplate {
 public:
  /// Throws ConfigError unless each placeholder occurs exactly once.
  PromptTemplate(std::string name, std::string text);

  static PromptTemplate load(const std::filesystem::path& path);
  /// Bundled Chinese polishing prompt (a reconstruction; override with
  /// --template).
  static PromptTemplate default_template();

  const std::string& name() const { return name_; }
  const std::string& text() const { return text_; }

  std::string render(std::string_view history, std::string_view answer) const;

 private:
  std::string name_;
  std::string text_;
  std::size_t history_pos_ = 0;
  std::size_t answer_pos_ = 0;
};

inline constexpr std::string_view kHistoryPlaceholder = "{history}";
inline constexpr std::string_view kAnswerPlaceholder = "{answer}";

/// Role-prefixed transcript of utterances [0, end), newline separated.
std::string render_history(const Conversation& conv, std::size_t end);

/// Throws ArgumentError unless `target_index` names a doctor utterance.
std::string render_prompt(const PromptTemplate& tmpl, const Conversation& conv,
                          std::size_t target_index);

/// Sends prompts through an LlmClient with a content-addressed cache in
/// front. Concurrent calls with the same prompt share one request.
class Polisher {
 public:
  Polisher(LlmClient& client, PolishCache& cache, PromptTemplate tmpl);

  const PromptTemplate& prompt_template() const { return template_; }
  LlmClient& client() { return client_; }

  /// SHA-256 over template name and rendered prompt.
  std::string cache_key(std::string_view prompt) const;

  /// Polished text, whitespace-trimmed. Throws PolishError (Empty when the
  /// model returns blank text).
  std::string polish_answer(const std::string& prompt);

  std::size_t cache_hits() const { return cache_hits_.load(); }
  std::size_t cache_misses() const { return cache_misses_.load(); }

 private:
  LlmClient& client_;
  PolishCache& cache_;
  PromptTemplate template_;
  std::mutex inflight_mutex_;
  std::map<std::string, std::shared_future<std::string>> inflight_;
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> cache_misses_{0};
};

enum class PolishPolicy { AllSuggestions, FinalSuggestionOnly };

PolishPolicy parse_polish_policy(std::string_view name);
std::string_view to_string(PolishPolicy policy);

/// Meta key set to "unpolished" on conversations where a selected turn could
/// not be polished.
inline constexpr std::string_view kPolishStatusKey = "polish_status";

struct PolishReport {
  std::size_t conversations = 0;
  std::size_t resumed_skipped = 0;
  std::size_t polished = 0;
  std::size_t questions_preserved = 0;
  std::size_t suggestions_not_selected = 0;
  std::size_t failed = 0;
  std::size_t unpolished_conversations = 0;
  std::size_t cache_hits = 0;
  std::size_t network_requests = 0;
  std::string last_completed_id;

  nlohmann::ordered_json to_json() const;
};

/// Thrown when a Fatal client error stops polish_corpus. Everything up to
/// and including `checkpoint_id` has been emitted.
class PolishAborted : public Error {
 public:
  PolishAborted(const std::string& what, std::string checkpoint_id, PolishReport report)
      : Error(what), checkpoint_id_(std::move(checkpoint_id)), report_(std::move(report)) {}
  const std::string& checkpoint_id() const { return checkpoint_id_; }
  const PolishReport& report() const { return report_; }

 private:
  std::string checkpoint_id_;
  PolishReport report_;
};

struct PolishRunOptions {
  PolishPolicy policy = PolishPolicy::AllSuggestions;
  /// Concurrent requests; defaults to the client's max_in_flight when 0.
  std::size_t max_in_flight = 0;
  /// Conversations buffered per scheduling window.
  std::size_t batch_size = 64;
  /// Skip input up to and including this conversation id.
  std::optional<std::string> resume_after;
};


/// Streams `in` through the polisher, emitting conversations to `sink` in
/// input order. Question turns (per `classifier`, judged on the original
/// text) are never sent. Transient and empty failures keep the original text
/// and flag the conversation; Fatal errors throw PolishAborted.
PolishReport polish_corpus(CorpusReader& in, const ConversationSink& sink, Polisher& polisher,
                           const AnswerClassifier& classifier, const PolishRunOptions& options);

}  // namespace coqforge
