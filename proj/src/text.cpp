#include "seedens/text.hpp"

#include <cctype>

namespace seedens {

namespace {

// Decodes one UTF-8 code point starting at `i`; advances `i` past it.
// An invalid lead or truncated sequence decodes as the single byte value.
char32_t decode_utf8(std::string_view s, std::size_t& i) {
  const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  unsigned char b0 = byte(i);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return b0;
  }
  if (i + len > s.size()) {
    ++i;
    return b0;
  }
  for (int k = 1; k < len; ++k) {
    unsigned char bk = byte(i + k);
    if ((bk & 0xC0) != 0x80) {
      ++i;
      return b0;
    }
    cp = (cp << 6) | (bk & 0x3F);
  }
  i += len;
  return cp;
}

bool is_ascii_punct(char32_t cp) {
  return cp < 0x80 && std::ispunct(static_cast<int>(cp));
}

char32_t ascii_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp - 'A' + 'a';
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

}  // namespace

bool is_unicode_whitespace(char32_t cp) {
  switch (cp) {
    case 0x09:
    case 0x0A:
    case 0x0B:
    case 0x0C:
    case 0x0D:
    case 0x20:
    case 0x85:
    case 0xA0:
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

std::size_t codepoint_length(std::string_view utf8) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < utf8.size(); ++n) decode_utf8(utf8, i);
  return n;
}

std::vector<Token> tokenize(std::string_view utf8) {
  // Decode once into (code point, index) pairs.
  std::vector<char32_t> cps;
  for (std::size_t i = 0; i < utf8.size();) cps.push_back(decode_utf8(utf8, i));

  std::vector<Token> tokens;
  std::size_t i = 0;
  const std::size_t n = cps.size();
  while (i < n) {
    while (i < n && is_unicode_whitespace(cps[i])) ++i;
    if (i >= n) break;
    std::size_t begin = i;
    while (i < n && !is_unicode_whitespace(cps[i])) ++i;
    std::size_t end = i;
    // strip punctuation from both edges
    while (begin < end && is_ascii_punct(cps[begin])) ++begin;
    while (end > begin && is_ascii_punct(cps[end - 1])) --end;
    if (begin == end) continue;
    Token tok;
    tok.begin = begin;
    tok.end = end;
    for (std::size_t k = begin; k < end; ++k) append_utf8(tok.text, ascii_lower(cps[k]));
    tokens.push_back(std::move(tok));
  }
  return tokens;
}

}  // namespace seedens
