#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace coqforge::utf8 {

/// Decodes UTF-8 into code points. Invalid bytes decode to U+FFFD so the
/// function is total over arbitrary input.
std::u32string decode(std::string_view text);

std::string encode(std::u32string_view text);
void append(std::string& out, char32_t cp);

/// Number of code points in `text`.
std::size_t length(std::string_view text);

/// Byte offset of the `n`-th code point (or text.size() if past the end).
std::size_t offset_of(std::string_view text, std::size_t n);

/// Strips ASCII whitespace and U+3000 (ideographic space) from both ends.
std::string trim(std::string_view text);

bool is_blank(std::string_view text);

/// CJK unified ideographs (basic block plus extension A).
bool is_cjk(char32_t cp);
bool contains_cjk(std::string_view text);

}  // namespace coqforge::utf8
