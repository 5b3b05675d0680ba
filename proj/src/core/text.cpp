#include "wimpe/text.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cctype>
#include <cmath>

namespace wimpe::text {

namespace {
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }
}  // namespace

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  while (b < s.size() && is_space(s[b])) ++b;
  std::size_t e = s.size();
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = lower(c);
  return out;
}

std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t nl = s.find('\n', start);
    if (nl == std::string_view::npos) nl = s.size();
    std::string_view line = s.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    start = nl + 1;
  }
  return out;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (prefix.size() > s.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (lower(s[i]) != lower(prefix[i])) return false;
  }
  return true;
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return true;
  auto it = std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end(),
                        [](char a, char b) { return lower(a) == lower(b); });
  return it != haystack.end();
}

bool is_code_fence(std::string_view line) {
  line = trim(line);
  if (line.size() < 3 || line.substr(0, 3) != "```") return false;
  for (char c : line.substr(3)) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) return false;
  }
  return true;
}

std::string strip_code_fences(std::string_view s) {
  std::string_view t = trim(s);
  if (t.size() < 3 || t.substr(0, 3) != "```") return std::string(t);
  const std::size_t first_nl = t.find('\n');
  if (first_nl == std::string_view::npos || !is_code_fence(t.substr(0, first_nl))) {
    return std::string(t);
  }
  std::string_view body = t.substr(first_nl + 1);
  const std::size_t close = body.rfind("```");
  if (close != std::string_view::npos && trim(body.substr(close)) == "```") {
    body = body.substr(0, close);
  }
  return std::string(trim(body));
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || u >= 0x80) {
      cur.push_back(lower(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), ptr);
}

std::uint64_t fnv1a64(std::string_view s, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::optional<std::string> prompt_section(std::string_view prompt, std::string_view header) {
  const auto lines = split_lines(prompt);
  std::optional<std::size_t> start;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]) == header) start = i + 1;
  }
  if (!start) return std::nullopt;
  std::string out;
  for (std::size_t i = *start; i < lines.size(); ++i) {
    if (lines[i].substr(0, 4) == "### ") break;
    out.append(lines[i]);
    out.push_back('\n');
  }
  return std::string(trim(out));
}

}  // namespace wimpe::text
