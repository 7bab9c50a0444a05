#include "coqforge/tokenizer.hpp"

#include <fstream>
#include <sstream>

#include "coqforge/error.hpp"
#include "coqforge/utf8.hpp"

namespace coqforge {
namespace {

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' ||
         c == 0x3000;
}

bool is_ascii_alnum(char32_t c) {
  return (c >= U'0' && c <= U'9') || (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z');
}

}  // namespace

Tokenizer Tokenizer::char_level() { return Tokenizer(TokenizerKind::CharLevel); }

Tokenizer Tokenizer::whitespace() { return Tokenizer(TokenizerKind::Whitespace); }

Tokenizer Tokenizer::dictionary(std::vector<std::string> words) {
  auto lexicon = std::make_shared<Lexicon>();
  for (const auto& w : words) {
    auto cps = utf8::decode(w);
    if (cps.empty()) continue;
    lexicon->max_length = std::max(lexicon->max_length, cps.size());
    lexicon->words.insert(std::move(cps));
  }
  Tokenizer t(TokenizerKind::Dictionary);
  t.lexicon_ = std::move(lexicon);
  return t;
}

Tokenizer Tokenizer::dictionary(const std::filesystem::path& lexicon) {
  std::ifstream in(lexicon);
  if (!in) throw ConfigError("cannot read lexicon " + lexicon.string());
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string word;
    if (fields >> word) words.push_back(word);
  }
  return dictionary(std::move(words));
}

Tokenizer Tokenizer::from_spec(std::string_view spec) {
  if (spec == "char" || spec == "char_level") return char_level();
  if (spec == "whitespace") return whitespace();
  if (spec.starts_with("dict:")) return dictionary(std::filesystem::path(spec.substr(5)));
  throw ConfigError("unknown tokenizer '" + std::string(spec) +
                    "' (valid: char, whitespace, dict:<lexicon path>)");
}

std::string Tokenizer::name() const {
  switch (kind_) {
    case TokenizerKind::CharLevel: return "char";
    case TokenizerKind::Whitespace: return "whitespace";
    case TokenizerKind::Dictionary: return "dictionary";
  }
  return "unknown";
}

Tokens Tokenizer::tokenize(std::string_view text) const {
  Tokens tokens;
  const auto cps = utf8::decode(text);
  switch (kind_) {
    case TokenizerKind::CharLevel:
      for (char32_t c : cps) {
        if (is_space(c)) continue;
        tokens.emplace_back();
        utf8::append(tokens.back(), c);
      }
      break;
    case TokenizerKind::Whitespace: {
      std::string current;
      for (char32_t c : cps) {
        if (is_space(c)) {
          if (!current.empty()) tokens.push_back(std::move(current));
          current.clear();
        } else {
          utf8::append(current, c);
        }
      }
      if (!current.empty()) tokens.push_back(std::move(current));
      break;
    }
    case TokenizerKind::Dictionary: {
      const auto& lex = *lexicon_;
      std::size_t i = 0;
      while (i < cps.size()) {
        if (is_space(cps[i])) {
          ++i;
          continue;
        }
        std::size_t len = 0;
        const std::size_t longest = std::min(lex.max_length, cps.size() - i);
        for (std::size_t n = longest; n >= 2; --n) {
          if (lex.words.contains(cps.substr(i, n))) {
            len = n;
            break;
          }
        }
        if (len == 0 && is_ascii_alnum(cps[i])) {
          len = 1;
          while (i + len < cps.size() && is_ascii_alnum(cps[i + len])) ++len;
        }
        if (len == 0) len = 1;
        tokens.push_back(utf8::encode(std::u32string_view(cps).substr(i, len)));
        i += len;
      }
      break;
    }
  }
  return tokens;
}

}  // namespace coqforge
