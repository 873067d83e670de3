#include <array>
#include <cctype>
#include <unordered_set>

#include "mando/error.hpp"
#include "mando/frontend.hpp"

namespace mando {

namespace {

const std::unordered_set<std::string_view> kKeywords = {
    "pragma",      "import",   "contract", "library",  "interface",
    "function",    "modifier", "event",    "struct",   "enum",
    "constructor", "fallback", "receive",  "using",    "is",
    "if",          "else",     "while",    "for",      "do",
    "return",      "returns",  "throw",    "require",  "assert",
    "revert",      "emit",     "new",      "delete",   "var",
    "public",      "private",  "internal", "external", "payable",
    "pure",        "view",     "constant", "memory",   "storage",
    "calldata",    "mapping",  "assembly", "break",    "continue",
    "true",        "false",    "anonymous","indexed",  "unchecked",
};

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

// Longest-match punctuation, checked 3-2-1 chars.
const std::array<std::string_view, 10> kPunct3 = {
    ">>=", "<<=", "**=", "...", "==>", "->>", "<<<", ">>>", "!==", "===",
};
const std::array<std::string_view, 21> kPunct2 = {
    "=>", "->", "++", "--", "+=", "-=", "*=", "/=", "%=", "==", "!=",
    "<=", ">=", "&&", "||", "<<", ">>", "**", "|=", "&=", "^=",
};

}  // namespace

bool is_type_keyword(std::string_view text) {
  if (text == "address" || text == "bool" || text == "string" ||
      text == "byte" || text == "var" || text == "mapping")
    return true;
  std::string_view digits;
  if (text.starts_with("uint"))
    digits = text.substr(4);
  else if (text.starts_with("int"))
    digits = text.substr(3);
  else if (text.starts_with("bytes"))
    digits = text.substr(5);
  else
    return false;
  if (digits.empty()) return true;
  for (char c : digits)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::uint32_t line = 1;
  std::size_t i = 0;
  const std::size_t n = src.size();

  auto push = [&](TokenKind kind, std::string text, std::uint32_t at) {
    out.push_back(Token{kind, std::move(text), at});
  };

  while (i < n) {
    const char c = src[i];
    if (c == '\n') {
      ++line;
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && src[i + 1] == '/') {
      while (i < n && src[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && src[i + 1] == '*') {
      const std::uint32_t start_line = line;
      i += 2;
      bool closed = false;
      while (i < n) {
        if (src[i] == '\n') ++line;
        if (src[i] == '*' && i + 1 < n && src[i + 1] == '/') {
          i += 2;
          closed = true;
          break;
        }
        ++i;
      }
      if (!closed)
        raise(ErrorCode::LexError, "line " + std::to_string(start_line) +
                                       ": unterminated block comment");
      continue;
    }
    if (c == '"' || c == '\'') {
      const std::uint32_t start_line = line;
      const char quote = c;
      std::string text;
      ++i;
      bool closed = false;
      while (i < n) {
        if (src[i] == '\n') break;  // strings cannot span lines
        if (src[i] == '\\' && i + 1 < n) {
          text += src[i];
          text += src[i + 1];
          i += 2;
          continue;
        }
        if (src[i] == quote) {
          ++i;
          closed = true;
          break;
        }
        text += src[i++];
      }
      if (!closed)
        raise(ErrorCode::LexError, "line " + std::to_string(start_line) +
                                       ": unterminated string literal");
      push(TokenKind::String, std::move(text), start_line);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      const std::uint32_t start_line = line;
      std::string text;
      if (c == '0' && i + 1 < n && (src[i + 1] == 'x' || src[i + 1] == 'X')) {
        text = src.substr(i, 2);
        i += 2;
        std::size_t digits = 0;
        while (i < n && std::isxdigit(static_cast<unsigned char>(src[i]))) {
          text += src[i++];
          ++digits;
        }
        if (digits == 0)
          raise(ErrorCode::LexError, "line " + std::to_string(start_line) +
                                         ": malformed hex literal");
      } else {
        while (i < n && std::isdigit(static_cast<unsigned char>(src[i])))
          text += src[i++];
        if (i < n && src[i] == '.' && i + 1 < n &&
            std::isdigit(static_cast<unsigned char>(src[i + 1]))) {
          text += src[i++];
          while (i < n && std::isdigit(static_cast<unsigned char>(src[i])))
            text += src[i++];
        }
        if (i < n && (src[i] == 'e' || src[i] == 'E')) {
          std::size_t j = i + 1;
          if (j < n && (src[j] == '+' || src[j] == '-')) ++j;
          if (j < n && std::isdigit(static_cast<unsigned char>(src[j]))) {
            text.append(src.substr(i, j - i));
            i = j;
            while (i < n && std::isdigit(static_cast<unsigned char>(src[i])))
              text += src[i++];
          }
        }
      }
      push(TokenKind::Number, std::move(text), start_line);
      continue;
    }
    if (ident_start(c)) {
      const std::uint32_t start_line = line;
      std::string text;
      while (i < n && ident_char(src[i])) text += src[i++];
      const bool kw = kKeywords.count(text) > 0 || is_type_keyword(text);
      push(kw ? TokenKind::Keyword : TokenKind::Ident, std::move(text),
           start_line);
      continue;
    }
    // punctuation, longest match first
    bool matched = false;
    for (std::string_view p : kPunct3) {
      if (src.substr(i, 3) == p) {
        push(TokenKind::Punct, std::string(p), line);
        i += 3;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    for (std::string_view p : kPunct2) {
      if (src.substr(i, 2) == p) {
        push(TokenKind::Punct, std::string(p), line);
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    push(TokenKind::Punct, std::string(1, c), line);
    ++i;
  }
  return out;
}

}  // namespace mando
