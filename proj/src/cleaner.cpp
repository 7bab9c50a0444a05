#include "coqforge/cleaner.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <boost/regex.hpp>

#include "coqforge/error.hpp"
#include "coqforge/utf8.hpp"
#include "embedded_data.hpp"

namespace coqforge {

static_assert(sizeof(wchar_t) == sizeof(char32_t), "code-point matching needs 32-bit wchar_t");

class CompiledPattern {
 public:
  explicit CompiledPattern(const std::wstring& source,
                           boost::regex_constants::syntax_option_type flags = boost::regex_constants::perl)
      : regex_(source, flags) {}
  const boost::wregex& regex() const { return regex_; }

 private:
  boost::wregex regex_;
};

namespace {

constexpr std::array<std::pair<std::string_view, NoiseCategory>, 10> kCategories{{
    {"missing_content", NoiseCategory::MissingContent},
    {"image", NoiseCategory::Image},
    {"reward", NoiseCategory::Reward},
    {"privacy", NoiseCategory::Privacy},
    {"broken_json", NoiseCategory::BrokenJson},
    {"link", NoiseCategory::Link},
    {"site_tip", NoiseCategory::SiteTip},
    {"voice_recording", NoiseCategory::VoiceRecording},
    {"auto_reply", NoiseCategory::AutoReply},
    {"other", NoiseCategory::Other},
}};

std::wstring widen(std::string_view utf8_text) {
  const auto cps = utf8::decode(utf8_text);
  return {cps.begin(), cps.end()};
}

std::string narrow(const std::wstring& text) {
  std::string out;
  out.reserve(text.size() * 3);
  for (wchar_t c : text) utf8::append(out, static_cast<char32_t>(c));
  return out;
}

// Trims and collapses the space runs a strip leaves behind.
std::wstring tidy(const std::wstring& text) {
  std::wstring out;
  out.reserve(text.size());
  for (wchar_t c : text) {
    const bool space = c == L' ' || c == L'\t' || c == 0x3000;
    if (space) {
      if (out.empty() || out.back() == L' ') continue;
      out.push_back(L' ');
    } else {
      out.push_back(c);
    }
  }
  while (!out.empty() && out.back() == L' ') out.pop_back();
  return out;
}

bool blank(const std::wstring& text) {
  return std::all_of(text.begin(), text.end(), [](wchar_t c) {
    return c == L' ' || c == L'\t' || c == L'\r' || c == L'\n' || c == 0x3000;
  });
}

RuleAction parse_action(const nlohmann::json& j, const std::string& rule) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "strip_match") return StripMatch{};
    if (name == "drop_utterance") return DropUtterance{};
    if (name == "drop_conversation") return DropConversation{};
  } else if (j.is_object() && j.size() == 1 && j.contains("replace_with") &&
             j["replace_with"].is_string()) {
    return ReplaceWith{j["replace_with"].get<std::string>()};
  }
  throw ConfigError("rule '" + rule + "': invalid action " + j.dump());
}

enum class UtteranceOutcome { Unchanged, Modified, Dropped, DropConversation };

// One pass of every rule over one utterance.
UtteranceOutcome apply_rules(std::wstring& text, const RuleSet& rules, CleaningReport& report) {
  if (const auto* any = rules.prefilter(); any && !boost::regex_search(text, any->regex()))
    return UtteranceOutcome::Unchanged;
  bool modified = false;
  for (std::size_t r = 0; r < rules.size(); ++r) {
    const auto& rule = rules.rules()[r];
    const auto& re = rule.compiled().regex();
    if (!boost::regex_search(text, re)) continue;
    ++report.rule_hits[r].second;
    const auto& action = rule.action();
    if (std::holds_alternative<DropConversation>(action)) return UtteranceOutcome::DropConversation;
    if (std::holds_alternative<DropUtterance>(action)) return UtteranceOutcome::Dropped;
    const std::wstring replacement =
        std::holds_alternative<ReplaceWith>(action)
            ? widen(std::get<ReplaceWith>(action).replacement)
            : std::wstring();
    text = boost::regex_replace(text, re, replacement,
                                boost::regex_constants::format_literal);
    modified = true;
    if (blank(text)) return UtteranceOutcome::Dropped;
  }
  return modified ? UtteranceOutcome::Modified : UtteranceOutcome::Unchanged;
}

constexpr int kMaxPasses = 8;

}  // namespace

std::string_view to_string(NoiseCategory category) {
  for (const auto& [name, c] : kCategories)
    if (c == category) return name;
  return "other";
}

NoiseCategory parse_category(std::string_view name) {
  for (const auto& [n, c] : kCategories)
    if (n == name) return c;
  throw ConfigError("unknown noise category '" + std::string(name) + "'");
}

std::vector<NoiseCategory> corpus_noise_categories() {
  std::vector<NoiseCategory> out;
  for (const auto& entry : kCategories)
    if (entry.second != NoiseCategory::Other) out.push_back(entry.second);
  return out;
}

CleaningRule::CleaningRule(std::string name, std::string pattern, RuleAction action,
                           NoiseCategory category)
    : name_(std::move(name)),
      pattern_(std::move(pattern)),
      action_(std::move(action)),
      category_(category) {
  try {
    compiled_ = std::make_shared<const CompiledPattern>(widen(pattern_));
  } catch (const boost::regex_error& e) {
    throw ConfigError("rule '" + name_ + "': pattern does not compile at position " +
                      std::to_string(e.position()) + ": " + e.what());
  }
}

bool CleaningRule::matches(std::string_view text) const {
  return boost::regex_search(widen(text), compiled_->regex());
}

RuleSet::RuleSet(std::vector<CleaningRule> rules) : rules_(std::move(rules)) {
  std::unordered_set<std::string> seen;
  for (const auto& rule : rules_)
    if (!seen.insert(rule.name()).second)
      throw ConfigError("duplicate rule name '" + rule.name() + "'");

  // Group numbers shift inside the alternation, so patterns that refer back
  // to a group are checked one by one.
  static const boost::regex backref(R"(\\(?:[1-9]|[kg])|\(\?P=)");
  if (rules_.empty()) return;
  std::wstring combined;
  for (const auto& rule : rules_) {
    if (boost::regex_search(rule.pattern(), backref)) return;
    if (!combined.empty()) combined += L'|';
    combined += L"(?:" + widen(rule.pattern()) + L")";
  }
  try {
    prefilter_ = std::make_shared<const CompiledPattern>(
        combined, boost::regex_constants::perl | boost::regex_constants::nosubs);
  } catch (const boost::regex_error&) {
    prefilter_.reset();
  }
}

bool RuleSet::any_match(std::string_view text) const {
  const auto wide = widen(text);
  if (prefilter_) return boost::regex_search(wide, prefilter_->regex());
  return std::any_of(rules_.begin(), rules_.end(), [&](const CleaningRule& rule) {
    return boost::regex_search(wide, rule.compiled().regex());
  });
}

bool RuleSet::same_patterns(const RuleSet& other) const {
  if (rules_.size() != other.rules_.size()) return false;
  for (std::size_t i = 0; i < rules_.size(); ++i)
    if (&rules_[i].compiled() != &other.rules_[i].compiled() &&
        rules_[i].pattern() != other.rules_[i].pattern())
      return false;
  return true;
}

RuleSet parse_rules(std::string_view json_text, std::string_view origin) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string(origin) + ": invalid JSON: " + e.what());
  }
  if (!doc.is_array()) throw ConfigError(std::string(origin) + ": expected a JSON array of rules");
  std::vector<CleaningRule> rules;
  rules.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& r = doc[i];
    const std::string where = std::string(origin) + " rule #" + std::to_string(i);
    if (!r.is_object()) throw ConfigError(where + ": not an object");
    for (const char* key : {"name", "pattern", "category"})
      if (!r.contains(key) || !r[key].is_string())
        throw ConfigError(where + ": missing string field '" + key + "'");
    if (!r.contains("action")) throw ConfigError(where + ": missing field 'action'");
    const auto name = r["name"].get<std::string>();
    rules.emplace_back(name, r["pattern"].get<std::string>(), parse_action(r["action"], name),
                       parse_category(r["category"].get<std::string>()));
  }
  return RuleSet(std::move(rules));
}

RuleSet load_rules(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read rule file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_rules(buffer.str(), path.string());
}

std::string_view default_rules_json() { return embedded::kDefaultRulesJson; }

const RuleSet& default_rules() {
  static const RuleSet rules = parse_rules(default_rules_json(), "default rules");
  return rules;
}

RuleSet resolve_rules(std::string_view spec) {
  if (spec == "default") return default_rules();
  return load_rules(std::filesystem::path(spec));
}

QualityScorer::QualityScorer(RuleSet detectors, double threshold)
    : detectors_(std::move(detectors)), threshold_(threshold) {}

QualityScore QualityScorer::score(const Conversation& conv) const {
  if (conv.utterances.empty()) return {};
  std::size_t noisy = 0;
  for (const auto& u : conv.utterances)
    if (detectors_.any_match(u.text)) ++noisy;
  return from_counts(noisy, conv.utterances.size());
}

QualityScore QualityScorer::from_counts(std::size_t noisy, std::size_t utterances) const {
  if (utterances == 0) return {};
  const double s = 1.0 - static_cast<double>(noisy) / static_cast<double>(utterances);
  return {s, s >= threshold_};
}

CleaningReport CleaningReport::for_rules(const RuleSet& rules) {
  CleaningReport report;
  report.rule_hits.reserve(rules.size());
  for (const auto& rule : rules.rules()) report.rule_hits.emplace_back(rule.name(), 0);
  return report;
}

std::size_t CleaningReport::hits(std::string_view rule_name) const {
  for (const auto& [name, count] : rule_hits)
    if (name == rule_name) return count;
  return 0;
}

std::size_t CleaningReport::total_hits() const {
  std::size_t total = 0;
  for (const auto& entry : rule_hits) total += entry.second;
  return total;
}

double CleaningReport::excellent_rate_before() const {
  return conversations_in == 0
             ? 0.0
             : static_cast<double>(excellent_before) / static_cast<double>(conversations_in);
}

double CleaningReport::excellent_rate_after() const {
  return conversations_kept == 0
             ? 0.0
             : static_cast<double>(excellent_after) / static_cast<double>(conversations_kept);
}

void CleaningReport::merge(const CleaningReport& other) {
  for (const auto& [name, count] : other.rule_hits) {
    auto it = std::find_if(rule_hits.begin(), rule_hits.end(),
                           [&](const auto& entry) { return entry.first == name; });
    if (it == rule_hits.end())
      rule_hits.emplace_back(name, count);
    else
      it->second += count;
  }
  conversations_in += other.conversations_in;
  conversations_kept += other.conversations_kept;
  conversations_dropped += other.conversations_dropped;
  utterances_dropped += other.utterances_dropped;
  utterances_modified += other.utterances_modified;
  excellent_before += other.excellent_before;
  excellent_after += other.excellent_after;
}

nlohmann::ordered_json CleaningReport::to_json() const {
  nlohmann::ordered_json hits = nlohmann::ordered_json::object();
  for (const auto& [name, count] : rule_hits) hits[name] = count;
  return {
      {"conversations_in", conversations_in},
      {"conversations_kept", conversations_kept},
      {"conversations_dropped", conversations_dropped},
      {"utterances_dropped", utterances_dropped},
      {"utterances_modified", utterances_modified},
      {"total_hits", total_hits()},
      {"excellent_rate_before", excellent_rate_before()},
      {"excellent_rate_after", excellent_rate_after()},
      {"rule_hits", std::move(hits)},
  };
}

namespace {

struct CleanTrace {
  // Utterances some rule matched on the first pass over the input; only
  // meaningful when `first_pass_complete`.
  std::size_t noisy_before = 0;
  bool first_pass_complete = true;
  // A final round found nothing to match.
  bool converged = false;
};

// One round of rule passes followed by repair. Sets `touched` when any rule
// changed the conversation.
std::optional<Conversation> clean_round(const Conversation& conv, const RuleSet& rules,
                                        CleaningReport& report, bool& touched,
                                        CleanTrace* trace = nullptr) {
  touched = false;

  std::vector<std::wstring> texts;
  texts.reserve(conv.utterances.size());
  for (const auto& u : conv.utterances) texts.push_back(widen(u.text));
  std::vector<bool> alive(texts.size(), true);
  std::vector<bool> changed(texts.size(), false);

  bool any_change = false;
  for (int pass = 0; pass < kMaxPasses; ++pass) {
    bool pass_changed = false;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (!alive[i]) continue;
      const auto outcome = apply_rules(texts[i], rules, report);
      if (trace && pass == 0) {
        if (outcome != UtteranceOutcome::Unchanged) ++trace->noisy_before;
        if (outcome == UtteranceOutcome::DropConversation) trace->first_pass_complete = false;
      }
      switch (outcome) {
        case UtteranceOutcome::Unchanged:
          break;
        case UtteranceOutcome::Modified:
          texts[i] = tidy(texts[i]);
          changed[i] = true;
          pass_changed = true;
          break;
        case UtteranceOutcome::Dropped:
          alive[i] = false;
          ++report.utterances_dropped;
          pass_changed = true;
          break;
        case UtteranceOutcome::DropConversation:
          return std::nullopt;
      }
    }
    if (!pass_changed) break;
    any_change = true;
  }
  if (!any_change) return conv;
  touched = true;

  Conversation out;
  out.id = conv.id;
  out.source = conv.source;
  out.meta = conv.meta;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (!alive[i]) continue;
    if (changed[i]) {
      ++report.utterances_modified;
      out.utterances.push_back({conv.utterances[i].speaker, narrow(texts[i])});
    } else {
      out.utterances.push_back(conv.utterances[i]);
    }
  }
  return repair(std::move(out));
}

std::optional<Conversation> clean_traced(const Conversation& conv, const RuleSet& rules,
                                         CleaningReport& report, CleanTrace* trace) {
  if (report.rule_hits.size() != rules.size()) {
    auto fresh = CleaningReport::for_rules(rules);
    fresh.merge(report);
    report = std::move(fresh);
  }
  if (rules.empty()) {
    if (trace) trace->converged = true;
    return conv;
  }

  // Repair trims and merges utterances, which can expose new matches, so
  // rounds repeat until one leaves the conversation untouched.
  bool touched = false;
  auto current = clean_round(conv, rules, report, touched, trace);
  for (int round = 1; current && touched && round < kMaxPasses; ++round) {
    auto next = clean_round(*current, rules, report, touched);
    if (!touched) break;
    current = std::move(next);
  }
  if (trace) trace->converged = current && !touched;
  return current;
}

}  // namespace

std::optional<Conversation> clean_conversation(const Conversation& conv, const RuleSet& rules,
                                               CleaningReport& report) {
  return clean_traced(conv, rules, report, nullptr);
}

CorpusCleaner::CorpusCleaner(const RuleSet& rules, const QualityScorer& scorer)
    : rules_(rules),
      scorer_(scorer),
      report_(CleaningReport::for_rules(rules)),
      derive_scores_(scorer.detectors().same_patterns(rules)) {}

std::optional<Conversation> CorpusCleaner::process(const Conversation& conv) {
  ++report_.conversations_in;
  CleanTrace trace;
  auto cleaned = clean_traced(conv, rules_, report_, derive_scores_ ? &trace : nullptr);
  const bool excellent_before =
      derive_scores_ && trace.first_pass_complete
          ? scorer_.from_counts(trace.noisy_before, conv.utterances.size()).excellent
          : scorer_.score(conv).excellent;
  if (excellent_before) ++report_.excellent_before;
  if (!cleaned) {
    ++report_.conversations_dropped;
    return std::nullopt;
  }
  ++report_.conversations_kept;
  const bool excellent_after = derive_scores_ && trace.converged
                                   ? scorer_.from_counts(0, cleaned->utterances.size()).excellent
                                   : scorer_.score(*cleaned).excellent;
  if (excellent_after) ++report_.excellent_after;
  return cleaned;
}

std::pair<std::vector<Conversation>, CleaningReport> clean_corpus(
    const std::vector<Conversation>& convs, const RuleSet& rules) {
  const QualityScorer scorer(rules);
  CorpusCleaner cleaner(rules, scorer);
  std::vector<Conversation> kept;
  for (const auto& conv : convs)
    if (auto c = cleaner.process(conv)) kept.push_back(std::move(*c));
  return {std::move(kept), cleaner.report()};
}

}  // namespace coqforge
