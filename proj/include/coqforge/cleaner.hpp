#pragma once

// Stage-one cleaning: an ordered regex rule engine over conversations plus a
// residual-noise quality scorer.
//
// Patterns use the Perl-compatible dialect of Boost.Regex and are matched
// against code points (not bytes), so character classes over CJK text
// behave. The shipped rule set sticks to the common ECMAScript subset:
// literals, classes, alternation, greedy/lazy quantifiers, anchors.

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "coqforge/core.hpp"
#include "json.hpp"

namespace coqforge {

enum class NoiseCategory {
  MissingContent,
  Image,
  Reward,
  Privacy,
  BrokenJson,
  Link,
  SiteTip,
  VoiceRecording,
  AutoReply,
  Other,
};

std::string_view to_string(NoiseCategory category);
NoiseCategory parse_category(std::string_view name);

/// The nine crawled-data noise categories (everything except Other).
std::vector<NoiseCategory> corpus_noise_categories();

struct StripMatch {};
struct ReplaceWith {
  std::string replacement;
};
struct DropUtterance {};
struct DropConversation {};

using RuleAction = std::variant<StripMatch, ReplaceWith, DropUtterance, DropConversation>;

class CompiledPattern;

class CleaningRule {
 public:
  /// Throws ConfigError naming the rule and the offending position when the
  /// pattern does not compile.
  CleaningRule(std::string name, std::string pattern, RuleAction action, NoiseCategory category);

  const std::string& name() const { return name_; }
  const std::string& pattern() const { return pattern_; }
  const RuleAction& action() const { return action_; }
  NoiseCategory category() const { return category_; }
  const CompiledPattern& compiled() const { return *compiled_; }

  bool matches(std::string_view text) const;

 private:
  std::string name_;
  std::string pattern_;
  RuleAction action_;
  NoiseCategory category_;
  std::shared_ptr<const CompiledPattern> compiled_;
};

/// Ordered, immutable list of rules with unique names.
class RuleSet {
 public:
  RuleSet() = default;
  /// Throws ConfigError on a duplicate name.
  explicit RuleSet(std::vector<CleaningRule> rules);

  const std::vector<CleaningRule>& rules() const { return rules_; }
  std::size_t size() const { return rules_.size(); }
  bool empty() const { return rules_.empty(); }

  /// True when any rule's pattern occurs in `text`.
  bool any_match(std::string_view text) const;

  /// Same patterns in the same order (shared compiled objects).
  bool same_patterns(const RuleSet& other) const;

  /// Alternation of every pattern; null when the set is empty or a pattern
  /// cannot be embedded (back-references).
  const CompiledPattern* prefilter() const { return prefilter_.get(); }

 private:
  std::vector<CleaningRule> rules_;
  std::shared_ptr<const CompiledPattern> prefilter_;
};

/// Parses the rule-file JSON (array of rule objects). `origin` labels errors.
RuleSet parse_rules(std::string_view json_text, std::string_view origin = "<rules>");
RuleSet load_rules(const std::filesystem::path& path);

/// The bundled reconstruction of the ~50 cleaning expressions.
const RuleSet& default_rules();
std::string_view default_rules_json();

/// "default" selects the bundled set, anything else is a path.
RuleSet resolve_rules(std::string_view spec);

struct QualityScore {
  double score = 1.0;
  bool excellent = true;
};

/// Scores residual noise: 1 - (fraction of utterances matching any detector
/// pattern). A conversation is excellent when its score reaches `threshold`.
class QualityScorer {
 public:
  explicit QualityScorer(RuleSet detectors, double threshold = 1.0);
  QualityScore score(const Conversation& conv) const;
  QualityScore from_counts(std::size_t noisy, std::size_t utterances) const;
  double threshold() const { return threshold_; }
  const RuleSet& detectors() const { return detectors_; }

 private:
  RuleSet detectors_;
  double threshold_;
};

/// Aggregated cleaning outcome; merge() is associative and commutative.
struct CleaningReport {
  /// Hit counts in rule order. A hit is one utterance on which the rule
  /// matched during one cleaning pass.
  std::vector<std::pair<std::string, std::size_t>> rule_hits;
  std::size_t conversations_in = 0;
  std::size_t conversations_kept = 0;
  std::size_t conversations_dropped = 0;
  std::size_t utterances_dropped = 0;
  std::size_t utterances_modified = 0;
  std::size_t excellent_before = 0;
  std::size_t excellent_after = 0;

  static CleaningReport for_rules(const RuleSet& rules);

  std::size_t hits(std::string_view rule_name) const;
  std::size_t total_hits() const;
  double excellent_rate_before() const;
  /// Over kept conversations.
  double excellent_rate_after() const;

  void merge(const CleaningReport& other);
  nlohmann::ordered_json to_json() const;
};

/// Applies `rules` in order to every utterance, repeating full passes until
/// nothing changes. Returns std::nullopt when a DropConversation rule fires or
/// the cleaned conversation can no longer satisfy the conversation
/// invariants. A conversation no rule touches is returned unchanged.
std::optional<Conversation> clean_conversation(const Conversation& conv, const RuleSet& rules,
                                               CleaningReport& report);

/// Streaming cleaner: feed conversations in order, collect the report.
class CorpusCleaner {
 public:
  CorpusCleaner(const RuleSet& rules, const QualityScorer& scorer);

  std::optional<Conversation> process(const Conversation& conv);
  const CleaningReport& report() const { return report_; }

 private:
  RuleSet rules_;
  QualityScorer scorer_;
  CleaningReport report_;
  // Scorer and cleaner share patterns, so scores follow from the cleaning
  // trace without rescanning.
  bool derive_scores_ = false;
};

/// Cleans a whole in-memory corpus.
std::pair<std::vector<Conversation>, CleaningReport> clean_corpus(
    const std::vector<Conversation>& convs, const RuleSet& rules);

}  // namespace coqforge
