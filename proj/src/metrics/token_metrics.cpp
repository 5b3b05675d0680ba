#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>

#include "wimpe/metrics.hpp"

namespace wimpe {

namespace {

// Byte length of a Unicode whitespace sequence starting at s[i], else 0.
std::size_t whitespace_at(std::string_view s, std::size_t i) {
  const auto b = [&](std::size_t k) -> unsigned char {
    return i + k < s.size() ? static_cast<unsigned char>(s[i + k]) : 0;
  };
  const unsigned char c = b(0);
  if (c == ' ' || (c >= '\t' && c <= '\r')) return 1;
  if (c == 0xC2 && (b(1) == 0x85 || b(1) == 0xA0)) return 2;
  if (c == 0xE1 && b(1) == 0x9A && b(2) == 0x80) return 3;
  if (c == 0xE2 && b(1) == 0x80 && ((b(2) >= 0x80 && b(2) <= 0x8A) || b(2) == 0xA8 || b(2) == 0xA9 || b(2) == 0xAF)) {
    return 3;
  }
  if (c == 0xE2 && b(1) == 0x81 && b(2) == 0x9F) return 3;
  if (c == 0xE3 && b(1) == 0x80 && b(2) == 0x80) return 3;
  return 0;
}

bool is_ascii_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

std::string normalize_token(std::string_view raw) {
  std::size_t b = 0;
  std::size_t e = raw.size();
  while (b < e && is_ascii_punct(raw[b])) ++b;
  while (e > b && is_ascii_punct(raw[e - 1])) --e;
  std::string out(raw.substr(b, e - b));
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::unordered_map<std::string, int> ngram_counts(const std::vector<std::string>& toks, int n) {
  std::unordered_map<std::string, int> out;
  if (static_cast<int>(toks.size()) < n) return out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    std::string key;
    for (int k = 0; k < n; ++k) {
      if (k) key.push_back('\x1f');
      key += toks[i + k];
    }
    ++out[key];
  }
  return out;
}

}  // namespace

std::vector<std::string> baseline_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    if (end > start) {
      std::string t = normalize_token(s.substr(start, end - start));
      if (!t.empty()) out.push_back(std::move(t));
    }
  };
  while (i < s.size()) {
    if (const std::size_t ws = whitespace_at(s, i)) {
      flush(i);
      i += ws;
      start = i;
    } else {
      ++i;
    }
  }
  flush(s.size());
  return out;
}

double bleu(std::string_view candidate, std::string_view reference, int max_n) {
  if (max_n < 1) throw PreconditionError("BLEU max_n must be >= 1");
  const auto cand = baseline_tokens(candidate);
  const auto ref = baseline_tokens(reference);
  if (cand.empty()) return 0.0;

  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const auto cand_counts = ngram_counts(cand, n);
    const auto ref_counts = ngram_counts(ref, n);
    double clipped = 0.0;
    for (const auto& [gram, count] : cand_counts) {
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) clipped += std::min(count, it->second);
    }
    const double total = std::max<double>(static_cast<double>(cand.size()) - n + 1, 0.0);
    const double precision = std::max(clipped, kBleuEpsilon) / std::max(total, 1.0);
    log_sum += std::log(precision);
  }
  const double c = static_cast<double>(cand.size());
  const double r = static_cast<double>(ref.size());
  const double brevity = c > r ? 1.0 : std::exp(1.0 - r / c);
  return std::clamp(brevity * std::exp(log_sum / max_n), 0.0, 1.0);
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(std::string_view candidate, std::string_view reference) {
  const auto cand = baseline_tokens(candidate);
  const auto ref = baseline_tokens(reference);
  if (cand.empty() || ref.empty()) return 0.0;
  const double lcs = static_cast<double>(lcs_length(cand, ref));
  const double p = lcs / static_cast<double>(cand.size());
  const double r = lcs / static_cast<double>(ref.size());
  if (p + r == 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

}  // namespace wimpe
