#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "coqforge/core.hpp"

namespace coqforge {

/// Labels a doctor answer as a question or a suggestion. Implementations
/// must be total and deterministic.
class AnswerClassifier {
 public:
  virtual ~AnswerClassifier() = default;
  virtual AnswerKind classify(std::string_view text) const = 0;
  virtual std::string name() const = 0;
};

/// Rule-based classifier: a question mark (full- or half-width) anywhere
/// makes the answer a Question. Otherwise the text is split into clauses at
/// Chinese/ASCII clause punctuation and each clause is checked for an
/// interrogative word at its start (`leading`) or end (`trailing`).
class LexiconClassifier final : public AnswerClassifier {
 public:
  /// Default lexicon: leading 有没有/是否/什么/哪/请问/多久, trailing
  /// 吗/呢/多久/是否/有没有/什么/哪.
  LexiconClassifier();
  LexiconClassifier(std::vector<std::string> leading, std::vector<std::string> trailing);

  AnswerKind classify(std::string_view text) const override;
  std::string name() const override { return "lexicon"; }

 private:
  std::vector<std::string> leading_;
  std::vector<std::string> trailing_;
};

/// "lexicon" (default) or "punctuation" (question marks only). Throws
/// ConfigError for unknown names.
std::unique_ptr<AnswerClassifier> make_classifier(std::string_view name);

inline AnswerKind classify_answer(std::string_view text) {
  static const LexiconClassifier classifier;
  return classifier.classify(text);
}

}  // namespace coqforge
