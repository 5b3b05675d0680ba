#include <algorithm>
#include <cmath>

#include "wimpe/metrics.hpp"
#include "wimpe/text.hpp"

namespace wimpe {

using nlohmann::json;

namespace {

// Drops commas that directly precede a closing bracket, outside strings.
std::string drop_trailing_commas(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      out.push_back(c);
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == ',') {
      std::size_t j = i + 1;
      while (j < s.size() && (s[j] == ' ' || s[j] == '\t' || s[j] == '\n' || s[j] == '\r')) ++j;
      if (j < s.size() && (s[j] == '}' || s[j] == ']')) continue;
    }
    out.push_back(c);
  }
  return out;
}

std::string ids_text(const std::set<int>& ids) {
  std::string out = "{";
  for (int id : ids) {
    if (out.size() > 1) out += ",";
    out += std::to_string(id);
  }
  return out + "}";
}

std::optional<int> parse_id(const std::string& key) {
  if (key.empty() || key.size() > 6 || key.find_first_not_of("0123456789") != std::string::npos) {
    return std::nullopt;
  }
  return std::stoi(key);
}

std::string shown(const json& v) { return v.dump(-1, ' ', false, json::error_handler_t::replace); }

// Numbers, or strings holding a number.
std::optional<double> numeric(const json& v) {
  if (v.is_number()) {
    const double d = v.get<double>();
    if (std::isfinite(d)) return d;
    return std::nullopt;
  }
  if (v.is_string()) return text::parse_number(v.get<std::string>());
  return std::nullopt;
}

// Looks up `key` under `top_key` and checks the id set against `points`.
// Returns the per-point objects in point order.
std::vector<const json*> point_entries(const json& root, const char* top_key,
                                       const std::vector<ScoringPoint>& points, bool count_first,
                                       const char* count_message) {
  if (!root.is_object()) throw GrammarError("judge output is not a JSON object");
  auto top = root.find(top_key);
  if (top == root.end() || !top->is_object()) {
    throw GrammarError(std::string("judge output lacks the \"") + top_key + "\" object");
  }
  if (count_first && top->size() != points.size()) {
    throw GrammarError(std::string(count_message) + " (expected " + std::to_string(points.size()) +
                       ", got " + std::to_string(top->size()) + ")");
  }
  std::set<int> expected;
  for (const auto& p : points) expected.insert(p.index);
  std::set<int> got;
  std::map<int, const json*> by_id;
  for (auto it = top->begin(); it != top->end(); ++it) {
    const auto id = parse_id(it.key());
    if (!id) throw GrammarError("point id \"" + it.key() + "\" is not a positive integer");
    got.insert(*id);
    by_id[*id] = &it.value();
  }
  if (got != expected || top->size() != points.size()) {
    throw GrammarError("point ids " + ids_text(got) + " do not match the input ids " + ids_text(expected) +
                       ": output must contain exactly the same set of IDs as the input");
  }
  std::vector<const json*> out;
  for (const auto& p : points) {
    const json* entry = by_id.at(p.index);
    if (!entry->is_object()) {
      throw GrammarError("entry for point " + std::to_string(p.index) + " is not an object");
    }
    out.push_back(entry);
  }
  return out;
}

std::string explanation_of(const json& entry, int index) {
  auto it = entry.find("explanation");
  if (it == entry.end() || !it->is_string()) {
    throw GrammarError("entry for point " + std::to_string(index) + " lacks a string \"explanation\"");
  }
  return it->get<std::string>();
}

}  // namespace

json extract_json(std::string_view raw, bool want_array) {
  const std::string body = text::strip_code_fences(raw);
  const char open = want_array ? '[' : '{';
  const char close = want_array ? ']' : '}';
  const std::size_t b = body.find(open);
  const std::size_t e = body.rfind(close);
  if (b == std::string::npos || e == std::string::npos || e < b) {
    throw GrammarError(std::string("judge output contains no JSON ") + (want_array ? "array" : "object"));
  }
  json j = json::parse(drop_trailing_commas(std::string_view(body).substr(b, e - b + 1)), nullptr, false);
  if (j.is_discarded()) throw GrammarError("judge output is not valid JSON");
  return j;
}

std::string serialize_points_for_prompt(const std::vector<ScoringPoint>& points) {
  std::string out;
  for (const auto& p : points) {
    out += std::to_string(p.index) + ". " + p.text + " (" + std::to_string(p.weight) + ")\n";
  }
  if (!out.empty()) out.pop_back();
  return out;
}

std::vector<PointAssessment> parse_alignment(std::string_view raw,
                                             const std::vector<ScoringPoint>& points) {
  const json root = extract_json(raw);
  const auto entries = point_entries(root, "point-wise scores", points, false, "");
  std::vector<PointAssessment> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const json& entry = *entries[i];
    const int index = points[i].index;
    auto m = entry.find("match_scores");
    if (m == entry.end()) {
      throw GrammarError("entry for point " + std::to_string(index) + " lacks \"match_scores\"");
    }
    const auto value = numeric(*m);
    if (!value || !is_alignment_value(*value)) {
      throw GrammarError("match score " + shown(*m) + " for point " + std::to_string(index) +
                         " must be one of: 0, 0.5, or 1");
    }
    out.push_back({index, *value, explanation_of(entry, index), std::nullopt});
  }
  return out;
}

std::vector<PenaltyAssessment> parse_penalties(std::string_view raw,
                                               const std::vector<ScoringPoint>& points) {
  const json root = extract_json(raw);
  const auto entries =
      point_entries(root, "point-wise penalty scores", points, true,
                    "the number of penalty scores should equal the number of scoring points");
  std::vector<PenaltyAssessment> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const json& entry = *entries[i];
    const int index = points[i].index;
    auto p = entry.find("penalty_scores");
    if (p == entry.end()) {
      throw GrammarError("entry for point " + std::to_string(index) + " lacks \"penalty_scores\"");
    }
    const auto value = numeric(*p);
    if (!value || !is_penalty_value(*value)) {
      throw GrammarError("penalty score " + shown(*p) + " for point " + std::to_string(index) +
                         " can only be 0 or 1");
    }
    out.push_back({index, *value, explanation_of(entry, index)});
  }
  return out;
}

Coarse3Rating parse_coarse3(std::string_view raw) {
  const json root = extract_json(raw);
  if (!root.is_object()) throw GrammarError("judge output is not a JSON object");
  auto rating = root.find("rating");
  if (rating == root.end()) throw GrammarError("judge output lacks \"rating\"");
  const auto value = numeric(*rating);
  if (!value || !is_alignment_value(*value)) {
    throw GrammarError("rating " + shown(*rating) + " invalid: the alignment score can only be 0, 0.5, or 1");
  }
  auto reason = root.find("reason");
  if (reason == root.end() || !reason->is_string()) throw GrammarError("judge output lacks a string \"reason\"");
  return {*value, reason->get<std::string>()};
}

double parse_rubric_rating(std::string_view raw, const std::set<double>& expected_scale) {
  if (expected_scale.empty()) throw PreconditionError("rubric scale is empty");
  std::optional<double> value;
  try {
    const json root = extract_json(raw);
    if (root.is_object()) {
      if (auto it = root.find("rating"); it != root.end()) {
        value = numeric(*it);
        if (!value) throw GrammarError("rating " + shown(*it) + " is not a number");
      }
    }
  } catch (const GrammarError&) {
    // Not JSON; fall back to a bare number on the last line.
  }
  if (!value) {
    const auto lines = text::split_lines(raw);
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
      if (text::trim(*it).empty() || text::is_code_fence(*it)) continue;
      value = text::parse_number(*it);
      break;
    }
  }
  if (!value) throw GrammarError("no rating found in judge output");
  if (!expected_scale.contains(*value)) {
    throw GrammarError("rating " + text::format_number(*value) + " is outside the rubric scale");
  }
  return *value;
}

}  // namespace wimpe
