#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hiersumm::text {

inline bool is_split_punct(char c) {
  switch (c) {
    case '.': case ',': case ';': case ':': case '!': case '?':
    case '(': case ')': case '"': case '\'':
      return true;
    default:
      return false;
  }
}

/// Lowercases ASCII letters, isolates . , ; : ! ? ( ) " ' as tokens and
/// splits on whitespace. Bytes >= 0x80 pass through untouched.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\f' || ch == '\v') {
      flush();
    } else if (is_split_punct(ch)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      cur.push_back(ch >= 'A' && ch <= 'Z' ? static_cast<char>(ch - 'A' + 'a') : ch);
    }
  }
  flush();
  return out;
}

inline std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) s += ' ';
    s += tokens[i];
  }
  return s;
}

}  // namespace hiersumm::text
