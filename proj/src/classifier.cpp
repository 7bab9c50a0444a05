#include "coqforge/classifier.hpp"

#include <array>

#include "coqforge/error.hpp"
#include "coqforge/utf8.hpp"

namespace coqforge {
namespace {

bool has_question_mark(std::string_view text) {
  return text.find('?') != std::string_view::npos ||
         text.find("？") != std::string_view::npos;
}

bool is_clause_break(char32_t c) {
  static constexpr std::u32string_view breaks = U"，。！；：、,.!;:\n\t …~～";
  return breaks.find(c) != std::u32string_view::npos;
}

// Trailing modal particles that may follow an interrogative word
// ("吃了什么啊").
bool is_soft_particle(char32_t c) { return c == U'啊' || c == U'呀' || c == U'哈'; }

class PunctuationClassifier final : public AnswerClassifier {
 public:
  AnswerKind classify(std::string_view text) const override {
    return has_question_mark(text) ? AnswerKind::Question : AnswerKind::Suggestion;
  }
  std::string name() const override { return "punctuation"; }
};

}  // namespace

LexiconClassifier::LexiconClassifier()
    : LexiconClassifier({"有没有", "是否", "什么", "哪", "请问", "多久"},
                        {"吗", "呢", "多久", "是否", "有没有", "什么", "哪"}) {}

LexiconClassifier::LexiconClassifier(std::vector<std::string> leading,
                                     std::vector<std::string> trailing)
    : leading_(std::move(leading)), trailing_(std::move(trailing)) {}

AnswerKind LexiconClassifier::classify(std::string_view text) const {
  if (has_question_mark(text)) return AnswerKind::Question;
  const auto cps = utf8::decode(text);
  std::size_t start = 0;
  for (std::size_t i = 0; i <= cps.size(); ++i) {
    if (i < cps.size() && !is_clause_break(cps[i])) continue;
    std::size_t end = i;
    while (end > start && is_soft_particle(cps[end - 1])) --end;
    if (end > start) {
      const std::string clause = utf8::encode(std::u32string_view(cps).substr(start, end - start));
      const std::string_view view(clause);
      for (const auto& word : leading_)
        if (view.starts_with(word)) return AnswerKind::Question;
      for (const auto& word : trailing_)
        if (view.ends_with(word)) return AnswerKind::Question;
    }
    start = i + 1;
  }
  return AnswerKind::Suggestion;
}

std::unique_ptr<AnswerClassifier> make_classifier(std::string_view name) {
  if (name == "lexicon" || name == "default") return std::make_unique<LexiconClassifier>();
  if (name == "punctuation") return std::make_unique<PunctuationClassifier>();
  throw ConfigError("unknown classifier '" + std::string(name) +
                    "' (valid: lexicon, punctuation)");
}

}  // namespace coqforge
