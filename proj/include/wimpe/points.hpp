#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "wimpe/core.hpp"
#include "wimpe/judge.hpp"

namespace wimpe {

// Prompt text with `{name}` placeholders. `{{` and `}}` render as literal
// braces; a brace not forming a placeholder is copied through unchanged.
struct PromptTemplate {
  std::string name;
  std::string body;

  std::set<std::string> placeholders() const;

  // Every placeholder in `required` must occur in the body, and every
  // placeholder in the body must be bound. Violations throw TemplateError
  // naming the placeholder.
  std::string render(const std::map<std::string, std::string>& bindings,
                     const std::set<std::string>& required = {}) const;

  static PromptTemplate load(const std::filesystem::path& path);
};

// Shipped templates: "points", "wpa", "pcp", "coarse3", "rank",
// "prompt_optim", "error_type".
const PromptTemplate& default_template(std::string_view name);
std::vector<std::string> default_template_names();

// Default templates, optionally overridden by `<dir>/<name>.txt` files.
class TemplateSet {
 public:
  TemplateSet() = default;
  explicit TemplateSet(const std::filesystem::path& override_dir);

  const PromptTemplate& get(std::string_view name) const;
  void set(PromptTemplate t);

 private:
  std::map<std::string, PromptTemplate, std::less<>> overrides_;
};

struct PointGrammarLine {
  std::string raw;
  std::string parsed_text;
  int parsed_weight = 0;
};

struct PointParseOptions {
  std::size_t max_points = 50;
};

std::string render_points_prompt(std::string_view question, std::string_view reference_answer,
                                 const PromptTemplate& tpl = default_template("points"));

// Parses "- [[text]] | ((weight))" lines. Blank lines, code fences and lines
// with none of the delimiters are skipped; a line with any delimiter must be
// well formed. Throws GrammarError.
std::vector<ScoringPoint> parse_points(std::string_view raw, const PointParseOptions& opts = {});

// Lower-level form used by parse_points; returns nullopt for skipped lines.
std::optional<PointGrammarLine> parse_point_line(std::string_view line);

// Serializes points in the point-generation output grammar.
std::string format_points(const std::vector<ScoringPoint>& points);

std::vector<ScoringPoint> generate_points(Judge& judge, std::string_view question,
                                          std::string_view reference_answer, int parse_retries = 2,
                                          const PromptTemplate& tpl = default_template("points"),
                                          const PointParseOptions& opts = {});

struct PointCorrection {
  ScoringPoint corrected;
  std::string note;
};

// Meta-prompt asking the judge for an improved version of `base`.
std::string render_optimization_prompt(const PromptTemplate& base, std::string_view question,
                                       std::string_view reference_answer,
                                       const std::vector<ScoringPoint>& originals,
                                       const std::vector<PointCorrection>& corrections);

PromptTemplate optimize_prompt(Judge& judge, const PromptTemplate& base, std::string_view question,
                               std::string_view reference_answer,
                               const std::vector<ScoringPoint>& originals,
                               const std::vector<PointCorrection>& corrections);

}  // namespace wimpe
