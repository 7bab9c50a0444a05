#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace coqforge {

using Tokens = std::vector<std::string>;

enum class TokenizerKind { CharLevel, Whitespace, Dictionary };

/// Deterministic tokenizer; the empty string always yields no tokens.
class Tokenizer {
 public:
  /// One token per non-space code point.
  static Tokenizer char_level();
  /// Split on ASCII whitespace and U+3000.
  static Tokenizer whitespace();
  /// Forward maximum matching against a lexicon file (one word per line;
  /// only the first whitespace-separated field is used, so jieba-style
  /// "word freq tag" dictionaries load as-is). Out-of-lexicon CJK text falls
  /// back to single characters; ASCII letter/digit runs stay whole.
  static Tokenizer dictionary(const std::filesystem::path& lexicon);
  static Tokenizer dictionary(std::vector<std::string> words);

  /// "char", "whitespace", or "dict:<path>". Throws ConfigError otherwise.
  static Tokenizer from_spec(std::string_view spec);

  TokenizerKind kind() const { return kind_; }
  std::string name() const;

  Tokens tokenize(std::string_view text) const;

 private:
  struct Lexicon {
    std::unordered_set<std::u32string> words;
    std::size_t max_length = 0;
  };

  explicit Tokenizer(TokenizerKind kind) : kind_(kind) {}

  TokenizerKind kind_;
  std::shared_ptr<const Lexicon> lexicon_;
};

}  // namespace coqforge
