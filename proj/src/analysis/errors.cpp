#include <cctype>
#include <set>

#include "wimpe/analysis.hpp"
#include "wimpe/metrics.hpp"
#include "wimpe/points.hpp"
#include "wimpe/retry.hpp"
#include "wimpe/text.hpp"

namespace wimpe {

namespace {

// Every maximal run of digits (with an optional fraction) in s.
std::set<std::string> numbers_in(std::string_view s) {
  std::set<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    if (j + 1 < s.size() && s[j] == '.' && std::isdigit(static_cast<unsigned char>(s[j + 1]))) {
      ++j;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    }
    out.emplace(s.substr(i, j - i));
    i = j;
  }
  return out;
}

bool has_word(std::string_view haystack, std::string_view word) {
  const std::string h = text::to_lower_ascii(haystack);
  std::size_t pos = 0;
  while ((pos = h.find(word, pos)) != std::string::npos) {
    const bool left = pos == 0 || !std::isalpha(static_cast<unsigned char>(h[pos - 1]));
    const std::size_t end = pos + word.size();
    const bool right = end >= h.size() || !std::isalpha(static_cast<unsigned char>(h[end]));
    if (left && right) return true;
    pos = end;
  }
  return false;
}

bool numeric_conflict(std::string_view explanation) {
  if (numbers_in(explanation).size() < 2) return false;
  for (std::string_view w : {"but", "whereas", "while", "instead", "however", "not", "rather"}) {
    if (has_word(explanation, w)) return true;
  }
  return false;
}

}  // namespace

const ErrorRules& ErrorRules::defaults() {
  static const ErrorRules rules{
      {
          {ErrorType::wrong_information,
           {"wrong", "incorrect", "inaccurate", "contradict", "conflicts with", "false", "erroneous"}},
          {ErrorType::vague_or_indirect_answer,
           {"vague", "indirect", "partial", "implicit", "unclear", "ambiguous", "general terms"}},
          {ErrorType::irrelevant_response, {"irrelevant", "off-topic", "off topic", "unrelated"}},
          {ErrorType::missing_key_information,
           {"missing", "omit", "does not mention", "doesn't mention", "not mentioned", "absent", "fails to mention",
            "no mention", "lacks"}},
      },
      true};
  return rules;
}

ErrorType classify_error(std::string_view explanation, double alignment, const ErrorRules& rules) {
  if (alignment >= 1.0) throw PreconditionError("error types apply only to points with alignment below 1");
  // A judge that names the taxonomy class outright is taken at its word.
  for (ErrorType t : kAllErrorTypes) {
    if (t != ErrorType::other && text::contains_ci(explanation, to_string(t))) return t;
  }
  for (const auto& [type, cues] : rules.keyword_rules) {
    for (const auto& cue : cues) {
      if (text::contains_ci(explanation, cue)) return type;
    }
  }
  if (rules.numeric_conflict_rule && numeric_conflict(explanation)) return ErrorType::wrong_information;
  return ErrorType::other;
}

ErrorType classify_error_with_judge(Judge& judge, std::string_view explanation, double alignment,
                                    int parse_retries) {
  if (alignment >= 1.0) throw PreconditionError("error types apply only to points with alignment below 1");
  const std::string prompt = default_template("error_type")
                                 .render({{"alignment", text::format_number(alignment)},
                                          {"explanation", std::string(explanation)}},
                                         {"explanation"});
  JudgeRequest req{prompt, std::string(tags::kErrorType)};
  try {
    return call_with_parse_retries(judge, req, parse_retries, "error typing", [](const std::string& raw) {
      const auto j = extract_json(raw, false);
      if (!j.is_object() || !j.contains("error_type") || !j["error_type"].is_string()) {
        throw GrammarError("error typing output needs a string \"error_type\"");
      }
      try {
        return error_type_from_string(j["error_type"].get<std::string>());
      } catch (const ValidationError& e) {
        throw GrammarError(e.what());
      }
    });
  } catch (const JudgeOutputError&) {
    return classify_error(explanation, alignment);
  }
}

ProportionTable error_distribution(const std::vector<ErrorRecord>& records, GroupBy group_by) {
  std::map<std::string, std::map<ErrorType, std::size_t>> counts;
  std::map<std::string, std::size_t> totals;
  for (const auto& r : records) {
    const std::string& g = group_by == GroupBy::model ? r.model_id : r.dataset;
    ++counts[g][r.error_type];
    ++totals[g];
  }
  ProportionTable out;
  for (const auto& [g, by_type] : counts) {
    auto& row = out[g];
    for (ErrorType t : kAllErrorTypes) row[t] = 0.0;
    for (const auto& [t, n] : by_type) row[t] = static_cast<double>(n) / static_cast<double>(totals[g]);
  }
  return out;
}

std::map<std::pair<ErrorType, double>, std::size_t> error_by_alignment(const std::vector<ErrorRecord>& records) {
  std::map<std::pair<ErrorType, double>, std::size_t> out;
  for (const auto& r : records) {
    if (r.alignment >= 1.0) continue;
    ++out[{r.error_type, r.alignment}];
  }
  return out;
}

}  // namespace wimpe
