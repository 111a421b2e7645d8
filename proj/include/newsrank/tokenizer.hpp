#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace newsrank {

/// Lowercases and splits on any non-alphanumeric byte. No stemming, no
/// stopword removal.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(char(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

inline size_t token_count(std::string_view text) { return tokenize(text).size(); }

}  // namespace newsrank
