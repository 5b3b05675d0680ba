#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wimpe/core.hpp"
#include "wimpe/judge.hpp"
#include "wimpe/points.hpp"

namespace wimpe {

struct WpaResult {
  double score = 0.0;
  std::vector<PointAssessment> assessments;
};

struct PcpResult {
  double score = 0.0;
  std::vector<PenaltyAssessment> assessments;
};

struct MergeConfig {
  double lambda_m = 0.2;

  void validate() const;
};

struct Coarse3Rating {
  double rating = 0.0;
  std::string reason;
};

// ---- judge output grammars ----

// Locates the JSON value in a judge reply: strips markdown fences, takes the
// outermost {...} (or [...] when `want_array`), drops trailing commas, and
// parses. Throws GrammarError.
nlohmann::json extract_json(std::string_view raw, bool want_array = false);

// "1. text (3)" per point, one per line.
std::string serialize_points_for_prompt(const std::vector<ScoringPoint>& points);

std::vector<PointAssessment> parse_alignment(std::string_view raw,
                                             const std::vector<ScoringPoint>& points);
std::vector<PenaltyAssessment> parse_penalties(std::string_view raw,
                                               const std::vector<ScoringPoint>& points);
Coarse3Rating parse_coarse3(std::string_view raw);
// JSON "rating" field, or a bare number as the last non-empty line.
double parse_rubric_rating(std::string_view raw, const std::set<double>& expected_scale);

// ---- judge-backed assessments ----

std::string render_alignment_prompt(std::string_view question, const std::vector<ScoringPoint>& points,
                                    std::string_view response,
                                    const PromptTemplate& tpl = default_template("wpa"));

std::vector<PointAssessment> assess_alignment(Judge& judge, std::string_view question,
                                              const std::vector<ScoringPoint>& points,
                                              std::string_view response, int parse_retries = 2,
                                              const PromptTemplate& tpl = default_template("wpa"));

std::string render_conflict_prompt(std::string_view question, std::string_view reference,
                                   const std::vector<ScoringPoint>& points, std::string_view response,
                                   const PromptTemplate& tpl = default_template("pcp"));

std::vector<PenaltyAssessment> assess_conflicts(Judge& judge, std::string_view question,
                                                std::string_view reference,
                                                const std::vector<ScoringPoint>& points,
                                                std::string_view response, int parse_retries = 2,
                                                const PromptTemplate& tpl = default_template("pcp"));

Coarse3Rating coarse3(Judge& judge, std::string_view question, std::string_view reference,
                      std::string_view response, int parse_retries = 2,
                      const PromptTemplate& tpl = default_template("coarse3"));

double rubric_score(Judge& judge, const PromptTemplate& tpl,
                    const std::map<std::string, std::string>& bindings,
                    const std::set<double>& expected_scale, int parse_retries = 2);

// ---- scoring formulas ----

// sum(m_i * w_i) / sum(w_i), pairing assessments to points by index.
double compute_wpa(const std::vector<ScoringPoint>& points,
                   const std::vector<PointAssessment>& assessments);

// sum(p_i * w_i) / sum(w_i). Higher means more conflict.
double compute_pcp(const std::vector<ScoringPoint>& points,
                   const std::vector<PenaltyAssessment>& penalties);

double compute_merge(double coarse, double wpa, const MergeConfig& cfg = {});

// ---- token baselines ----

// Lowercase, split on Unicode whitespace, strip leading/trailing punctuation.
std::vector<std::string> baseline_tokens(std::string_view s);

inline constexpr double kBleuEpsilon = 1e-9;

double bleu(std::string_view candidate, std::string_view reference, int max_n = 4);
double rouge_l(std::string_view candidate, std::string_view reference);

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

}  // namespace wimpe
