#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>

#include "wimpe/judge.hpp"
#include "wimpe/text.hpp"

namespace wimpe {

using nlohmann::json;

void FixtureTable::add(std::string tag, std::string hash, std::vector<std::string> responses) {
  if (responses.empty()) throw PreconditionError("fixture for tag " + tag + " has no responses");
  entries_[{std::move(tag), std::move(hash)}] = std::move(responses);
}

const std::vector<std::string>* FixtureTable::find(const std::string& tag,
                                                   const std::string& hash) const {
  if (auto it = entries_.find({tag, hash}); it != entries_.end()) return &it->second;
  if (auto it = entries_.find({tag, "*"}); it != entries_.end()) return &it->second;
  return nullptr;
}

FixtureTable FixtureTable::load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open fixture file " + path.string());
  FixtureTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("tag") || !j["tag"].is_string()) {
      throw DatasetError(line_no, "fixture line needs a string \"tag\"");
    }
    std::vector<std::string> responses;
    if (j.contains("responses") && j["responses"].is_array()) {
      for (const auto& r : j["responses"]) {
        if (!r.is_string()) throw DatasetError(line_no, "fixture responses must be strings");
        responses.push_back(r.get<std::string>());
      }
    } else if (j.contains("response") && j["response"].is_string()) {
      responses.push_back(j["response"].get<std::string>());
    } else {
      throw DatasetError(line_no, "fixture line needs \"response\" or \"responses\"");
    }
    table.add(j["tag"].get<std::string>(), j.value("hash", "*"), std::move(responses));
  }
  return table;
}

MockJudge::MockJudge(std::uint64_t seed, MockBehavior behavior, FixtureTable fixtures,
                     std::string model, double temperature)
    : seed_(seed),
      behavior_(behavior),
      fixtures_(std::move(fixtures)),
      model_(std::move(model)),
      temperature_(temperature) {}

std::string MockJudge::complete(const JudgeRequest& req) {
  if (req.prompt_text.empty()) throw PreconditionError("judge prompt is empty");
  const std::string hash = hash_of(req);
  std::string out;
  if (behavior_ == MockBehavior::scripted) {
    const auto* responses = fixtures_.find(req.tag, hash);
    if (responses == nullptr) {
      throw FixtureMissingError("no scripted response for tag \"" + req.tag + "\" and hash " + hash);
    }
    std::lock_guard lock(mu_);
    std::size_t& cursor = cursors_[{req.tag, hash}];
    out = (*responses)[std::min(cursor, responses->size() - 1)];
    ++cursor;
  } else {
    out = echo(req);
  }
  calls_.fetch_add(1);
  std::lock_guard lock(mu_);
  transcripts_.push_back({hash, req.tag, out, "1970-01-01T00:00:00Z"});
  return out;
}

std::size_t MockJudge::calls_for(std::string_view tag) const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(std::count_if(transcripts_.begin(), transcripts_.end(),
                                                [&](const JudgeTranscript& t) { return t.tag == tag; }));
}

std::vector<JudgeTranscript> MockJudge::transcripts() const {
  std::lock_guard lock(mu_);
  return transcripts_;
}

std::unique_ptr<Judge> mock_judge(std::uint64_t seed, MockBehavior behavior, FixtureTable fixtures) {
  return std::make_unique<MockJudge>(seed, behavior, std::move(fixtures));
}

// ---- echo behavior ----
//
// A crude offline stand-in for a real judge. It reads the input blocks of the
// shipped templates and answers from lexical overlap, so the outputs track
// response quality well enough for desk-scale pipeline runs.

namespace {

const std::set<std::string>& stopwords() {
  static const std::set<std::string> kWords = {
      "the", "and", "for", "are", "but", "not", "you", "all", "any", "can", "had", "her", "was",
      "one", "our", "out", "has", "his", "how", "its", "who", "did", "yes", "she", "him", "too",
      "use", "that", "with", "have", "this", "will", "your", "from", "they", "been", "were",
      "which", "their", "there", "what", "about", "would", "these", "other", "into", "than",
      "then", "them", "some", "also", "such", "only", "very", "more", "most"};
  return kWords;
}

std::set<std::string> content_words(std::string_view s) {
  std::set<std::string> out;
  for (auto& w : text::words(s)) {
    if (w.size() >= 3 && !stopwords().contains(w)) out.insert(std::move(w));
  }
  return out;
}

double coverage(std::string_view target, const std::set<std::string>& answer) {
  const auto want = content_words(target);
  if (want.empty()) return 1.0;
  std::size_t hit = 0;
  for (const auto& w : want) hit += answer.contains(w) ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(want.size());
}

// Uniform in [0,1) from a hash of the inputs.
double coin(std::uint64_t seed, std::string_view a, std::string_view b = {}) {
  std::uint64_t h = text::fnv1a64(a, 0xcbf29ce484222325ULL ^ (seed * 0x9E3779B97F4A7C15ULL));
  h = text::fnv1a64(b, h);
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
}

std::string section_or_empty(std::string_view prompt, std::string_view header) {
  return text::prompt_section(prompt, header).value_or("");
}

std::string sanitize_point(std::string s) {
  for (const char* bad : {"[[", "]]", "((", "))"}) {
    for (auto pos = s.find(bad); pos != std::string::npos; pos = s.find(bad)) s.erase(pos, 1);
  }
  std::replace(s.begin(), s.end(), '|', '/');
  return std::string(text::trim(s));
}

std::vector<std::string> sentences(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == '\n' || c == '\r') c = ' ';
    cur.push_back(c);
    if (c == '.' || c == '!' || c == '?' || c == ';') {
      std::string t = sanitize_point(cur);
      if (content_words(t).size() > 0) out.push_back(std::move(t));
      cur.clear();
    }
  }
  std::string t = sanitize_point(cur);
  if (!content_words(t).empty()) out.push_back(std::move(t));
  return out;
}

struct ListedPoint {
  std::string id;
  std::string text;
};

// Parses "N. text (w)" lines.
std::vector<ListedPoint> listed_points(std::string_view block) {
  std::vector<ListedPoint> out;
  for (auto line : text::split_lines(block)) {
    line = text::trim(line);
    const auto dot = line.find(". ");
    if (dot == std::string_view::npos || dot == 0) continue;
    const auto id = line.substr(0, dot);
    if (!std::all_of(id.begin(), id.end(), [](char c) { return c >= '0' && c <= '9'; })) continue;
    std::string_view body = line.substr(dot + 2);
    if (const auto paren = body.rfind(" ("); paren != std::string_view::npos) body = body.substr(0, paren);
    out.push_back({std::string(id), std::string(body)});
  }
  return out;
}

double quantize(double c, double full, double partial) {
  if (c >= full) return 1.0;
  if (c >= partial) return 0.5;
  return 0.0;
}

std::string echo_points(std::uint64_t seed, std::string_view prompt) {
  const std::string reference = section_or_empty(prompt, sections::kReference);
  auto parts = sentences(reference);
  if (parts.empty()) parts.push_back(sanitize_point(reference.empty() ? "reference" : reference));
  if (parts.size() > 12) parts.resize(12);
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    int w = 3;
    if (i > 0) w = 1 + static_cast<int>(coin(seed, parts[i], "weight") * 3.0);
    out += "- [[" + parts[i] + "]] | ((" + std::to_string(std::clamp(w, 1, 3)) + "))\n";
  }
  return out;
}

std::string echo_wpa(std::uint64_t seed, std::string_view prompt) {
  const auto answer = content_words(section_or_empty(prompt, sections::kGenerated));
  json scores = json::object();
  for (const auto& p : listed_points(section_or_empty(prompt, sections::kPoints))) {
    const double m = quantize(coverage(p.text, answer), 0.75, 0.35);
    const double c = coin(seed, p.text, p.id);
    std::string why;
    if (m == 1.0) {
      why = "The generated answer fully covers this scoring point.";
    } else if (m == 0.5) {
      why = c < 0.7 ? "The generated answer only partially and indirectly addresses this point."
                    : "The generated answer mentions this point but gives incorrect details.";
    } else {
      why = c < 0.8 ? "The generated answer omits this scoring point entirely."
                    : "The generated answer is unrelated to this point and irrelevant.";
    }
    scores[p.id] = {{"match_scores", m}, {"explanation", why}};
  }
  return json{{"point-wise scores", scores}}.dump(2);
}

std::string echo_pcp(std::uint64_t seed, std::string_view prompt) {
  const auto answer = content_words(section_or_empty(prompt, sections::kGenerated));
  json scores = json::object();
  for (const auto& p : listed_points(section_or_empty(prompt, sections::kPoints))) {
    const double cov = coverage(p.text, answer);
    const bool conflict = cov > 0.0 && cov < 0.5 && coin(seed, p.text, "pcp") < 0.4;
    scores[p.id] = {{"penalty_scores", conflict ? 1 : 0},
                    {"explanation", conflict ? "The answer states details that contradict this point."
                                             : "No conflicting content was found."}};
  }
  return json{{"point-wise penalty scores", scores}}.dump(2);
}

std::string echo_coarse3(std::string_view prompt) {
  const auto answer = content_words(section_or_empty(prompt, sections::kGenerated));
  const double cov = coverage(section_or_empty(prompt, sections::kReference), answer);
  const double rating = quantize(cov, 0.7, 0.3);
  return json{{"reason", "Coverage of the reference answer is " + text::format_number(cov) + "."},
              {"rating", rating}}
      .dump(2);
}

std::string echo_rubric(std::string_view prompt) {
  const auto answer = content_words(section_or_empty(prompt, sections::kGenerated));
  const double cov = coverage(section_or_empty(prompt, sections::kReference), answer);
  const int rating = 1 + std::min(4, static_cast<int>(cov * 5.0));
  return json{{"reason", "Lexical coverage heuristic."}, {"rating", rating}}.dump();
}

std::string echo_rank(std::uint64_t seed, std::string_view prompt) {
  const std::string reference = section_or_empty(prompt, sections::kReference);
  const std::string block = section_or_empty(prompt, sections::kResponses);
  struct Cand {
    std::string label;
    std::string body;
  };
  std::vector<Cand> cands;
  for (auto line : text::split_lines(block)) {
    const auto t = text::trim(line);
    if (t.size() >= 4 && t.front() == '[' && t.back() == ']' && t[1] == 'R') {
      cands.push_back({std::string(t.substr(1, t.size() - 2)), {}});
    } else if (!cands.empty()) {
      cands.back().body.append(line);
      cands.back().body.push_back('\n');
    }
  }
  std::vector<std::pair<double, std::string>> scored;
  for (const auto& c : cands) {
    const double s = coverage(reference, content_words(c.body)) + 1e-6 * coin(seed, c.label, c.body);
    scored.emplace_back(s, c.label);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  json order = json::array();
  for (const auto& [s, label] : scored) order.push_back(label);
  return order.dump();
}

std::string echo_prompt_optim(std::string_view prompt) {
  std::string base = section_or_empty(prompt, sections::kBasePrompt);
  if (base.empty()) return {};
  return base + "\n- Keep each corrected scoring point self-contained and weight it by necessity.\n";
}

std::string echo_error_type(std::string_view prompt) {
  const std::string expl = section_or_empty(prompt, sections::kExplanation);
  std::string type = "other";
  if (text::contains_ci(expl, "omit") || text::contains_ci(expl, "missing")) {
    type = "missing_key_information";
  }
  return json{{"error_type", type}}.dump();
}

}  // namespace

std::string MockJudge::echo(const JudgeRequest& req) const {
  const std::string_view p = req.prompt_text;
  if (req.tag == tags::kPoints) return echo_points(seed_, p);
  if (req.tag == tags::kWpa) return echo_wpa(seed_, p);
  if (req.tag == tags::kPcp) return echo_pcp(seed_, p);
  if (req.tag == tags::kCoarse3) return echo_coarse3(p);
  if (req.tag == tags::kRank) return echo_rank(seed_, p);
  if (req.tag == tags::kRubric) return echo_rubric(p);
  if (req.tag == tags::kPromptOptim) return echo_prompt_optim(p);
  if (req.tag == tags::kErrorType) return echo_error_type(p);
  throw FixtureMissingError("echo mock has no behavior for tag \"" + req.tag + "\"");
}

}  // namespace wimpe
