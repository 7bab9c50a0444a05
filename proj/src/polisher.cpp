#include "coqforge/polisher.hpp"

#include <fstream>
#include <sstream>

#include "coqforge/parallel.hpp"
#include "coqforge/utf8.hpp"
#include "embedded_data.hpp"

namespace coqforge {
namespace {

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size()))
    ++n;
  return n;
}

enum class JobState { Pending, Polished, Failed };

struct Job {
  std::size_t conversation = 0;
  std::size_t utterance = 0;
  std::string prompt;
  JobState state = JobState::Pending;
  std::string text;
};

}  // namespace

PromptTemplate::PromptTemplate(std::string name, std::string text)
    : name_(std::move(name)), text_(std::move(text)) {
  for (auto placeholder : {kHistoryPlaceholder, kAnswerPlaceholder}) {
    const auto n = count_occurrences(text_, placeholder);
    if (n != 1)
      throw ConfigError("template '" + name_ + "': placeholder " + std::string(placeholder) +
                        " must occur exactly once (found " + std::to_string(n) + ")");
  }
  history_pos_ = text_.find(kHistoryPlaceholder);
  answer_pos_ = text_.find(kAnswerPlaceholder);
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read prompt template " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return PromptTemplate(path.stem().string(), buffer.str());
}

PromptTemplate PromptTemplate::default_template() {
  return PromptTemplate("polish_zh", std::string(embedded::kDefaultPolishTemplate));
}

std::string PromptTemplate::render(std::string_view history, std::string_view answer) const {
  // Substitute by position so placeholder-looking text inside the
  // conversation is never expanded.
  const bool history_first = history_pos_ < answer_pos_;
  const std::size_t first = history_first ? history_pos_ : answer_pos_;
  const std::size_t second = history_first ? answer_pos_ : history_pos_;
  const std::size_t first_len = history_first ? kHistoryPlaceholder.size() : kAnswerPlaceholder.size();
  const std::size_t second_len = history_first ? kAnswerPlaceholder.size() : kHistoryPlaceholder.size();
  const std::string_view first_value = history_first ? history : answer;
  const std::string_view second_value = history_first ? answer : history;

  std::string out;
  out.reserve(text_.size() + history.size() + answer.size());
  out.append(text_, 0, first);
  out.append(first_value);
  out.append(text_, first + first_len, second - first - first_len);
  out.append(second_value);
  out.append(text_, second + second_len);
  return out;
}

std::string render_history(const Conversation& conv, std::size_t end) {
  std::string out;
  for (std::size_t i = 0; i < end && i < conv.utterances.size(); ++i) {
    if (i > 0) out.push_back('\n');
    out.append(role_prefix(conv.utterances[i].speaker));
    out.append(conv.utterances[i].text);
  }
  return out;
}

std::string render_prompt(const PromptTemplate& tmpl, const Conversation& conv,
                          std::size_t target_index) {
  if (target_index >= conv.utterances.size())
    throw ArgumentError("target index " + std::to_string(target_index) + " out of range");
  if (conv.utterances[target_index].speaker != Speaker::Doctor)
    throw ArgumentError("target index " + std::to_string(target_index) +
                        " is not a doctor utterance");
  return tmpl.render(render_history(conv, target_index), conv.utterances[target_index].text);
}

Polisher::Polisher(LlmClient& client, PolishCache& cache, PromptTemplate tmpl)
    : client_(client), cache_(cache), template_(std::move(tmpl)) {}

std::string Polisher::cache_key(std::string_view prompt) const {
  std::string material = template_.name();
  material.push_back('\x1f');
  material.append(prompt);
  return sha256_hex(material);
}

std::string Polisher::polish_answer(const std::string& prompt) {
  const std::string key = cache_key(prompt);
  std::promise<std::string> promise;
  std::shared_future<std::string> shared;
  {
    std::lock_guard lock(inflight_mutex_);
    if (auto hit = cache_.get(key)) {
      ++cache_hits_;
      return *hit;
    }
    if (auto it = inflight_.find(key); it != inflight_.end()) {
      shared = it->second;
    } else {
      inflight_.emplace(key, promise.get_future().share());
    }
  }
  if (shared.valid()) {
    ++cache_hits_;
    return shared.get();
  }

  ++cache_misses_;
  try {
    ChatRequest request;
    request.prompt = prompt;
    request.temperature = client_.config().temperature;
    request.max_tokens = client_.config().max_response_length;
    std::string text = utf8::trim(client_.complete(request));
    if (text.empty()) throw PolishError(PolishError::Kind::Empty, "model returned empty text");
    cache_.put(key, text);
    promise.set_value(text);
    std::lock_guard lock(inflight_mutex_);
    inflight_.erase(key);
    return text;
  } catch (...) {
    promise.set_exception(std::current_exception());
    std::lock_guard lock(inflight_mutex_);
    inflight_.erase(key);
    throw;
  }
}

PolishPolicy parse_polish_policy(std::string_view name) {
  if (name == "all_suggestions" || name == "all") return PolishPolicy::AllSuggestions;
  if (name == "final_suggestion_only" || name == "final") return PolishPolicy::FinalSuggestionOnly;
  throw ConfigError("unknown polish policy '" + std::string(name) +
                    "' (valid: all_suggestions, final_suggestion_only)");
}

std::string_view to_string(PolishPolicy policy) {
  return policy == PolishPolicy::AllSuggestions ? "all_suggestions" : "final_suggestion_only";
}

nlohmann::ordered_json PolishReport::to_json() const {
  return {
      {"conversations", conversations},
      {"resumed_skipped", resumed_skipped},
      {"polished", polished},
      {"questions_preserved", questions_preserved},
      {"suggestions_not_selected", suggestions_not_selected},
      {"failed", failed},
      {"unpolished_conversations", unpolished_conversations},
      {"cache_hits", cache_hits},
      {"network_requests", network_requests},
      {"last_completed_id", last_completed_id},
  };
}

PolishReport polish_corpus(CorpusReader& in, const ConversationSink& sink, Polisher& polisher,
                           const AnswerClassifier& classifier, const PolishRunOptions& options) {
  PolishReport report;
  const std::size_t workers =
      options.max_in_flight > 0 ? options.max_in_flight : polisher.client().config().max_in_flight;
  const std::size_t batch_size = std::max<std::size_t>(1, options.batch_size);
  const std::size_t hits_start = polisher.cache_hits();
  const std::size_t misses_start = polisher.cache_misses();
  bool resuming = options.resume_after.has_value();

  auto sync_counters = [&] {
    report.cache_hits = polisher.cache_hits() - hits_start;
    report.network_requests = polisher.cache_misses() - misses_start;
  };

  std::vector<Conversation> batch;
  bool exhausted = false;
  while (!exhausted) {
    batch.clear();
    while (batch.size() < batch_size) {
      auto conv = in.next();
      if (!conv) {
        exhausted = true;
        break;
      }
      if (resuming) {
        ++report.resumed_skipped;
        if (conv->id == *options.resume_after) resuming = false;
        continue;
      }
      batch.push_back(std::move(*conv));
    }

    std::vector<Job> jobs;
    for (std::size_t c = 0; c < batch.size(); ++c) {
      const auto& conv = batch[c];
      std::vector<std::size_t> suggestions;
      for (std::size_t i = 0; i < conv.utterances.size(); ++i) {
        if (conv.utterances[i].speaker != Speaker::Doctor) continue;
        if (classifier.classify(conv.utterances[i].text) == AnswerKind::Question)
          ++report.questions_preserved;
        else
          suggestions.push_back(i);
      }
      if (options.policy == PolishPolicy::FinalSuggestionOnly && suggestions.size() > 1) {
        report.suggestions_not_selected += suggestions.size() - 1;
        suggestions.erase(suggestions.begin(), suggestions.end() - 1);
      }
      for (std::size_t i : suggestions)
        jobs.push_back({c, i, render_prompt(polisher.prompt_template(), conv, i), JobState::Pending, {}});
    }

    std::optional<PolishError> fatal;
    try {
      for_each_index(jobs.size(), workers, [&](std::size_t j) {
        try {
          jobs[j].text = polisher.polish_answer(jobs[j].prompt);
          jobs[j].state = JobState::Polished;
        } catch (const PolishError& e) {
          if (e.kind() == PolishError::Kind::Fatal) throw;
          jobs[j].state = JobState::Failed;
        }
      });
    } catch (const PolishError& e) {
      fatal = e;
    }

    std::size_t j = 0;
    for (std::size_t c = 0; c < batch.size(); ++c) {
      const std::size_t first_job = j;
      while (j < jobs.size() && jobs[j].conversation == c) ++j;
      bool complete = true;
      for (std::size_t k = first_job; k < j; ++k)
        complete = complete && jobs[k].state != JobState::Pending;
      if (!complete) {
        sync_counters();
        throw PolishAborted(std::string(fatal ? fatal->what() : "polishing aborted"),
                            report.last_completed_id, report);
      }
      auto& conv = batch[c];
      bool unpolished = false;
      for (std::size_t k = first_job; k < j; ++k) {
        if (jobs[k].state == JobState::Polished) {
          conv.utterances[jobs[k].utterance].text = normalize_text(jobs[k].text);
          ++report.polished;
        } else {
          ++report.failed;
          unpolished = true;
        }
      }
      if (unpolished) {
        conv.meta[std::string(kPolishStatusKey)] = "unpolished";
        ++report.unpolished_conversations;
      }
      sink(conv);
      ++report.conversations;
      report.last_completed_id = conv.id;
    }
    if (fatal) {
      sync_counters();
      throw PolishAborted(fatal->what(), report.last_completed_id, report);
    }
  }
  if (resuming)
    throw ConfigError("resume checkpoint id '" + *options.resume_after + "' not found in input");
  sync_counters();
  return report;
}

}  // namespace coqforge
