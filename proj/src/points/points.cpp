#include "wimpe/points.hpp"
#include "wimpe/retry.hpp"
#include "wimpe/text.hpp"

namespace wimpe {

namespace {

bool has_delimiter(std::string_view s) {
  return s.find("[[") != std::string_view::npos || s.find("]]") != std::string_view::npos ||
         s.find("((") != std::string_view::npos || s.find("))") != std::string_view::npos;
}

[[noreturn]] void unbalanced(std::string_view line) {
  throw GrammarError("unbalanced scoring point delimiters in line: " + std::string(line));
}

}  // namespace

std::optional<PointGrammarLine> parse_point_line(std::string_view line) {
  std::string_view t = text::trim(line);
  if (t.empty() || text::is_code_fence(t) || !has_delimiter(t)) return std::nullopt;

  if (t.front() == '-' || t.front() == '*') t = text::trim(t.substr(1));
  if (t.substr(0, 2) != "[[") unbalanced(line);
  if (t.size() < 4 || t.substr(t.size() - 2) != "))") unbalanced(line);

  const std::size_t weight_open = t.rfind("((");
  if (weight_open == std::string_view::npos || weight_open + 2 > t.size() - 2) unbalanced(line);
  const std::string_view weight_text = text::trim(t.substr(weight_open + 2, t.size() - 2 - weight_open - 2));

  std::string_view head = text::trim(t.substr(0, weight_open));
  if (head.empty() || head.back() != '|') unbalanced(line);
  head = text::trim(head.substr(0, head.size() - 1));
  if (head.size() < 4 || head.substr(head.size() - 2) != "]]") unbalanced(line);
  const std::string_view point_text = text::trim(head.substr(2, head.size() - 4));
  if (has_delimiter(point_text) || weight_text.find_first_of("()") != std::string_view::npos) {
    unbalanced(line);
  }
  if (point_text.empty()) throw GrammarError("empty scoring point text in line: " + std::string(line));

  int weight = 0;
  const bool digits = !weight_text.empty() && weight_text.size() <= 3 &&
                      weight_text.find_first_not_of("0123456789") == std::string_view::npos;
  if (digits) {
    for (char c : weight_text) weight = weight * 10 + (c - '0');
  }
  if (!digits || !is_point_weight(weight)) {
    throw GrammarError("invalid weight \"" + std::string(weight_text) +
                       "\": the weight of the points can only be 1, 2 or 3");
  }
  return PointGrammarLine{std::string(line), std::string(point_text), weight};
}

std::vector<ScoringPoint> parse_points(std::string_view raw, const PointParseOptions& opts) {
  std::vector<ScoringPoint> out;
  for (auto line : text::split_lines(raw)) {
    auto parsed = parse_point_line(line);
    if (!parsed) continue;
    if (out.size() >= opts.max_points) {
      throw GrammarError("judge produced more than " + std::to_string(opts.max_points) + " scoring points");
    }
    out.push_back({static_cast<int>(out.size()) + 1, std::move(parsed->parsed_text), parsed->parsed_weight});
  }
  if (out.empty()) throw GrammarError("judge output contains no scoring points");
  return out;
}

std::string format_points(const std::vector<ScoringPoint>& points) {
  std::string out;
  for (const auto& p : points) {
    out += "- [[" + p.text + "]] | ((" + std::to_string(p.weight) + "))\n";
  }
  return out;
}

std::string render_points_prompt(std::string_view question, std::string_view reference_answer,
                                 const PromptTemplate& tpl) {
  if (text::trim(question).empty()) throw PreconditionError("question is empty");
  if (text::trim(reference_answer).empty()) throw PreconditionError("reference answer is empty");
  return tpl.render({{"question", std::string(question)}, {"reference_answer", std::string(reference_answer)}},
                    {"question", "reference_answer"});
}

std::vector<ScoringPoint> generate_points(Judge& judge, std::string_view question,
                                          std::string_view reference_answer, int parse_retries,
                                          const PromptTemplate& tpl, const PointParseOptions& opts) {
  JudgeRequest req{render_points_prompt(question, reference_answer, tpl), std::string(tags::kPoints)};
  return call_with_parse_retries(judge, req, parse_retries, "scoring point generation",
                                 [&](const std::string& raw) { return parse_points(raw, opts); });
}

namespace {

std::string numbered(const std::vector<ScoringPoint>& points) {
  std::string out;
  for (const auto& p : points) {
    out += std::to_string(p.index) + ". " + p.text + " (" + std::to_string(p.weight) + ")\n";
  }
  return out;
}

}  // namespace

std::string render_optimization_prompt(const PromptTemplate& base, std::string_view question,
                                       std::string_view reference_answer,
                                       const std::vector<ScoringPoint>& originals,
                                       const std::vector<PointCorrection>& corrections) {
  if (originals.empty()) throw PreconditionError("no unexpected scoring points supplied");
  if (corrections.empty()) throw PreconditionError("no corrected scoring points supplied");
  std::string corrected;
  for (const auto& c : corrections) {
    corrected += std::to_string(c.corrected.index) + ". " + c.corrected.text + " (" +
                 std::to_string(c.corrected.weight) + ")";
    if (!c.note.empty()) corrected += "\n   Note: " + c.note;
    corrected += '\n';
  }
  return default_template("prompt_optim")
      .render({{"base_prompt", base.body},
               {"question", std::string(question)},
               {"reference_answer", std::string(reference_answer)},
               {"original_points", numbered(originals)},
               {"corrected_points", corrected}});
}

PromptTemplate optimize_prompt(Judge& judge, const PromptTemplate& base, std::string_view question,
                               std::string_view reference_answer,
                               const std::vector<ScoringPoint>& originals,
                               const std::vector<PointCorrection>& corrections) {
  JudgeRequest req{render_optimization_prompt(base, question, reference_answer, originals, corrections),
                   std::string(tags::kPromptOptim)};
  std::string body = text::strip_code_fences(judge.complete(req));
  if (text::trim(body).empty()) {
    throw JudgeOutputError("prompt optimization returned an empty prompt", body);
  }
  return {base.name + "-optim", std::move(body)};
}

}  // namespace wimpe
