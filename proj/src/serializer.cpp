#include "coqforge/serializer.hpp"

#include "coqforge/error.hpp"
#include "coqforge/utf8.hpp"

namespace coqforge {
namespace {

constexpr std::string_view kDoctorPrompt = "\n医生：";

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (true) {
    const auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      return lines;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
}

// Longest prefix of `text` whose unit count fits in `max_units`.
std::string_view fit_prefix(std::string_view text, std::size_t max_units, const UnitCounter& counter) {
  if (counter(text) <= max_units) return text;
  std::size_t lo = 0;
  std::size_t hi = utf8::length(text);
  while (lo < hi) {
    const std::size_t mid = (lo + hi + 1) / 2;
    if (counter(text.substr(0, utf8::offset_of(text, mid))) <= max_units)
      lo = mid;
    else
      hi = mid - 1;
  }
  return text.substr(0, utf8::offset_of(text, lo));
}

}  // namespace

std::size_t count_code_points(std::string_view text) { return utf8::length(text); }

void LengthBudget::validate() const {
  if (max_input_units == 0 || max_target_units == 0)
    throw ConfigError("length budget maxima must be > 0");
  if (!counter) throw ConfigError("length budget has no unit counter");
}

std::vector<TurnPair> expand_conversation(const Conversation& conv) {
  std::vector<TurnPair> pairs;
  const std::span<const Utterance> all(conv.utterances);
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].speaker != Speaker::Doctor) continue;
    pairs.push_back({all.first(i), &all[i], i});
  }
  return pairs;
}

std::string build_input(std::span<const Utterance> context) {
  if (context.empty()) throw ArgumentError("cannot build input from an empty context");
  if (context.front().speaker != Speaker::Patient)
    throw ArgumentError("context must start with a patient utterance");
  std::string out;
  for (std::size_t i = 0; i < context.size(); ++i) {
    if (i > 0) out.push_back('\n');
    out.append(role_prefix(context[i].speaker));
    out.append(context[i].text);
  }
  out.append(kDoctorPrompt);
  return out;
}

std::optional<std::vector<Utterance>> parse_input(std::string_view input) {
  const auto lines = split_lines(input);
  // Odd number of context lines plus the bare prompt.
  if (lines.size() < 2 || lines.size() % 2 != 0) return std::nullopt;
  if (lines.back() != kDoctorPrefix) return std::nullopt;
  std::vector<Utterance> context;
  context.reserve(lines.size() - 1);
  for (std::size_t i = 0; i + 1 < lines.size(); ++i) {
    const Speaker expected = i % 2 == 0 ? Speaker::Patient : Speaker::Doctor;
    const auto prefix = role_prefix(expected);
    if (!lines[i].starts_with(prefix)) return std::nullopt;
    context.push_back({expected, std::string(lines[i].substr(prefix.size()))});
  }
  return context;
}

bool matches_input_grammar(std::string_view input) { return parse_input(input).has_value(); }

TruncateResult truncate(std::string_view input, std::string_view target,
                        const LengthBudget& budget) {
  const auto lines = split_lines(input);
  if (!matches_input_grammar(input))
    throw ArgumentError("truncate: input does not follow the role-prefixed grammar");

  TruncateResult result;
  // Byte offsets where each context line starts.
  std::vector<std::size_t> starts;
  starts.reserve(lines.size());
  for (const auto& line : lines) starts.push_back(static_cast<std::size_t>(line.data() - input.data()));

  std::size_t first_line = 0;
  std::string_view kept = input;
  const std::size_t newest_patient = lines.size() - 2;
  while (budget.counter(kept) > budget.max_input_units) {
    if (first_line + 2 > newest_patient) {
      result.outcome = TruncateOutcome::Skipped;
      return result;
    }
    first_line += 2;
    kept = input.substr(starts[first_line]);
  }

  const std::string_view fitted_target = fit_prefix(target, budget.max_target_units, budget.counter);
  if (fitted_target.empty()) {
    result.outcome = TruncateOutcome::Skipped;
    return result;
  }
  result.input = std::string(kept);
  result.target = std::string(fitted_target);
  result.outcome = (first_line > 0 || fitted_target.size() != target.size())
                       ? TruncateOutcome::Truncated
                       : TruncateOutcome::Unchanged;
  return result;
}

ExpansionPolicy parse_expansion_policy(std::string_view name) {
  if (name == "all_doctor_turns" || name == "all") return ExpansionPolicy::AllDoctorTurns;
  if (name == "final_turn_only" || name == "final") return ExpansionPolicy::FinalTurnOnly;
  throw ConfigError("unknown expansion policy '" + std::string(name) +
                    "' (valid: all_doctor_turns, final_turn_only)");
}

void SerializeReport::merge(const SerializeReport& other) {
  conversations += other.conversations;
  samples += other.samples;
  truncated += other.truncated;
  target_truncated += other.target_truncated;
  skipped_over_budget += other.skipped_over_budget;
}

nlohmann::ordered_json SerializeReport::to_json() const {
  return {{"conversations", conversations},
          {"samples", samples},
          {"truncated", truncated},
          {"target_truncated", target_truncated},
          {"skipped_over_budget", skipped_over_budget}};
}

std::vector<TrainingSample> serialize_conversation(const Conversation& conv,
                                                   const LengthBudget& budget,
                                                   ExpansionPolicy policy,
                                                   SerializeReport& report) {
  ++report.conversations;
  auto pairs = expand_conversation(conv);
  if (policy == ExpansionPolicy::FinalTurnOnly && pairs.size() > 1)
    pairs.erase(pairs.begin(), pairs.end() - 1);

  std::vector<TrainingSample> samples;
  samples.reserve(pairs.size());
  for (const auto& pair : pairs) {
    const std::string input = build_input(pair.context);
    auto fitted = truncate(input, pair.target->text, budget);
    if (fitted.outcome == TruncateOutcome::Skipped) {
      ++report.skipped_over_budget;
      continue;
    }
    if (fitted.input.size() != input.size()) ++report.truncated;
    if (fitted.target.size() != pair.target->text.size()) ++report.target_truncated;
    ++report.samples;
    samples.push_back({std::move(fitted.input), std::move(fitted.target), conv.id, pair.target_index});
  }
  return samples;
}

std::string training_jsonl(const TrainingSample& sample) {
  nlohmann::ordered_json j{{"input", sample.input}, {"target", sample.target}};
  return j.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

std::string eval_jsonl(const TrainingSample& sample) {
  nlohmann::ordered_json j{{"id", sample.conversation_id + "#" + std::to_string(sample.turn_index)},
                           {"input", sample.input},
                           {"target", sample.target}};
  return j.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

TrainingWriter::TrainingWriter(const std::filesystem::path& path)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw IoError("cannot create " + path.string());
}

void TrainingWriter::write(const TrainingSample& sample) {
  out_ << training_jsonl(sample) << '\n';
  if (!out_)
    throw IoError("write to " + path_.string() + " failed after " + std::to_string(count_) +
                  " samples");
  ++count_;
}

void TrainingWriter::close() {
  out_.flush();
  if (!out_) throw IoError("flush of " + path_.string() + " failed");
  out_.close();
}

std::size_t write_training_file(const std::vector<TrainingSample>& samples,
                                const std::filesystem::path& path) {
  TrainingWriter writer(path);
  for (const auto& s : samples) writer.write(s);
  writer.close();
  return writer.count();
}

}  // namespace coqforge
