#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace seedens {

// One whitespace-delimited token after ASCII-lowercasing and stripping
// leading/trailing ASCII punctuation. begin/end are code-point offsets into
// the original text covering the stripped token, [begin, end).
struct Token {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

// Number of Unicode code points in a UTF-8 string. Invalid bytes count as one
// code point each.
std::size_t codepoint_length(std::string_view utf8);

bool is_unicode_whitespace(char32_t cp);

// Splits on Unicode whitespace, strips ASCII punctuation from token edges,
// lowercases ASCII letters. Tokens that strip to nothing are dropped.
std::vector<Token> tokenize(std::string_view utf8);

}  // namespace seedens
