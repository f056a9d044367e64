#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace stretchbot::text {

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::string to_upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

inline bool starts_with_icase(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) !=
        std::tolower(static_cast<unsigned char>(prefix[i])))
      return false;
  }
  return true;
}

inline std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find('\n', start);
    if (end == std::string_view::npos) end = s.size();
    auto line = s.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

/// Collapses runs of whitespace (including newlines) to single spaces.
inline std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool pending = false;
  for (char c : trim(s)) {
    if (is_space(c)) {
      pending = true;
      continue;
    }
    if (pending && !out.empty()) out += ' ';
    pending = false;
    out += c;
  }
  return out;
}

/// Entity-name key: lowercase with spaces, underscores and hyphens dropped,
/// so "water bottle", "Water_Bottle" and "WaterBottle" compare equal.
inline std::string entity_key(std::string_view s) {
  std::string out;
  for (char c : trim(s)) {
    if (c == ' ' || c == '_' || c == '-') continue;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

/// "water bottle" -> "WATER_BOTTLE"
inline std::string object_token(std::string_view s) {
  std::string out;
  bool gap = false;
  for (char c : trim(s)) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      if (gap && !out.empty()) out += '_';
      gap = false;
      out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    } else {
      gap = true;
    }
  }
  return out;
}

/// Lowercase word tokens (letters, digits and apostrophes).
inline std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '\'') {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

/// Case-insensitive phrase search on word boundaries.
inline bool contains_phrase(std::string_view haystack, std::string_view phrase) {
  auto h = words(haystack);
  auto p = words(phrase);
  if (p.empty() || p.size() > h.size()) return false;
  for (std::size_t i = 0; i + p.size() <= h.size(); ++i) {
    if (std::equal(p.begin(), p.end(), h.begin() + static_cast<std::ptrdiff_t>(i))) return true;
  }
  return false;
}

/// Case-insensitive replacement of every occurrence of `needle`.
/// A capitalized match gets a capitalized replacement.
inline std::string replace_all_icase(std::string_view s, std::string_view needle,
                                     std::string_view replacement) {
  if (needle.empty()) return std::string(s);
  const auto lower = to_lower(s);
  const auto lneedle = to_lower(needle);
  std::string out;
  std::size_t pos = 0;
  while (true) {
    auto hit = lower.find(lneedle, pos);
    if (hit == std::string::npos) break;
    out.append(s.substr(pos, hit - pos));
    std::string r(replacement);
    if (!r.empty() && std::isupper(static_cast<unsigned char>(s[hit])))
      r[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(r[0])));
    out.append(r);
    pos = hit + needle.size();
  }
  out.append(s.substr(pos));
  return out;
}

/// Splits into sentences ending with . ! or ? (terminator kept).
inline std::vector<std::string> sentences(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < s.size(); ++i) {
    cur += s[i];
    if (s[i] == '.' || s[i] == '!' || s[i] == '?') {
      while (i + 1 < s.size() && (s[i + 1] == '.' || s[i + 1] == '!' || s[i + 1] == '?'))
        cur += s[++i];
      auto t = trim(cur);
      if (!t.empty()) out.emplace_back(t);
      cur.clear();
    }
  }
  auto t = trim(cur);
  if (!t.empty()) out.emplace_back(t);
  return out;
}

}  // namespace stretchbot::text
