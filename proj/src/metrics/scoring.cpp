#include <cmath>
#include <map>

#include "wimpe/metrics.hpp"
#include "wimpe/retry.hpp"
#include "wimpe/text.hpp"

namespace wimpe {

namespace {

void require_points(const std::vector<ScoringPoint>& points) {
  if (points.empty()) throw PreconditionError("no scoring points");
}

// Weights of `points` in point order, matched against the index set of the
// assessments.
template <class Assessment>
std::vector<std::pair<int, const Assessment*>> pair_by_index(const std::vector<ScoringPoint>& points,
                                                             const std::vector<Assessment>& items) {
  require_points(points);
  std::map<int, const Assessment*> by_index;
  for (const auto& a : items) {
    if (!by_index.emplace(a.point_index, &a).second) {
      throw PairingError("duplicate assessment for point " + std::to_string(a.point_index));
    }
  }
  if (by_index.size() != points.size()) {
    throw PairingError("got " + std::to_string(by_index.size()) + " assessments for " +
                       std::to_string(points.size()) + " scoring points");
  }
  std::vector<std::pair<int, const Assessment*>> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    if (!is_point_weight(p.weight)) {
      throw PreconditionError("point " + std::to_string(p.index) + " has weight outside {1,2,3}");
    }
    auto it = by_index.find(p.index);
    if (it == by_index.end()) throw PairingError("no assessment for point " + std::to_string(p.index));
    out.emplace_back(p.weight, it->second);
  }
  return out;
}

}  // namespace

void MergeConfig::validate() const {
  if (!(lambda_m >= 0.0 && lambda_m <= 1.0)) throw ConfigError("lambda_m must lie in [0,1]");
}

double compute_wpa(const std::vector<ScoringPoint>& points,
                   const std::vector<PointAssessment>& assessments) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& [w, a] : pair_by_index(points, assessments)) {
    if (!(a->alignment >= 0.0 && a->alignment <= 1.0)) {
      throw PreconditionError("alignment outside [0,1] for point " + std::to_string(a->point_index));
    }
    num += a->alignment * w;
    den += w;
  }
  return num / den;
}

double compute_pcp(const std::vector<ScoringPoint>& points,
                   const std::vector<PenaltyAssessment>& penalties) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& [w, p] : pair_by_index(points, penalties)) {
    if (!(p->penalty >= 0.0 && p->penalty <= 1.0)) {
      throw PreconditionError("penalty outside [0,1] for point " + std::to_string(p->point_index));
    }
    num += p->penalty * w;
    den += w;
  }
  return num / den;
}

double compute_merge(double coarse, double wpa, const MergeConfig& cfg) {
  cfg.validate();
  if (!(coarse >= 0.0 && coarse <= 1.0)) throw PreconditionError("coarse score outside [0,1]");
  if (!(wpa >= 0.0 && wpa <= 1.0)) throw PreconditionError("WPA score outside [0,1]");
  return cfg.lambda_m * coarse + (1.0 - cfg.lambda_m) * wpa;
}

std::string render_alignment_prompt(std::string_view question, const std::vector<ScoringPoint>& points,
                                    std::string_view response, const PromptTemplate& tpl) {
  require_points(points);
  return tpl.render({{"question", std::string(question)},
                     {"scoring_points", serialize_points_for_prompt(points)},
                     {"generated_answer", std::string(response)}},
                    {"scoring_points", "generated_answer"});
}

std::vector<PointAssessment> assess_alignment(Judge& judge, std::string_view question,
                                              const std::vector<ScoringPoint>& points,
                                              std::string_view response, int parse_retries,
                                              const PromptTemplate& tpl) {
  JudgeRequest req{render_alignment_prompt(question, points, response, tpl), std::string(tags::kWpa)};
  return call_with_parse_retries(judge, req, parse_retries, "point-wise alignment",
                                 [&](const std::string& raw) { return parse_alignment(raw, points); });
}

std::string render_conflict_prompt(std::string_view question, std::string_view reference,
                                   const std::vector<ScoringPoint>& points, std::string_view response,
                                   const PromptTemplate& tpl) {
  require_points(points);
  return tpl.render({{"question", std::string(question)},
                     {"reference_answer", std::string(reference)},
                     {"scoring_points", serialize_points_for_prompt(points)},
                     {"generated_answer", std::string(response)}},
                    {"scoring_points", "generated_answer"});
}

std::vector<PenaltyAssessment> assess_conflicts(Judge& judge, std::string_view question,
                                                std::string_view reference,
                                                const std::vector<ScoringPoint>& points,
                                                std::string_view response, int parse_retries,
                                                const PromptTemplate& tpl) {
  JudgeRequest req{render_conflict_prompt(question, reference, points, response, tpl),
                   std::string(tags::kPcp)};
  return call_with_parse_retries(judge, req, parse_retries, "point-wise conflict penalty",
                                 [&](const std::string& raw) { return parse_penalties(raw, points); });
}

Coarse3Rating coarse3(Judge& judge, std::string_view question, std::string_view reference,
                      std::string_view response, int parse_retries, const PromptTemplate& tpl) {
  JudgeRequest req{tpl.render({{"question", std::string(question)},
                               {"reference_answer", std::string(reference)},
                               {"generated_answer", std::string(response)}},
                              {"generated_answer"}),
                   std::string(tags::kCoarse3)};
  return call_with_parse_retries(judge, req, parse_retries, "coarse 3-level rating",
                                 [](const std::string& raw) { return parse_coarse3(raw); });
}

double rubric_score(Judge& judge, const PromptTemplate& tpl,
                    const std::map<std::string, std::string>& bindings,
                    const std::set<double>& expected_scale, int parse_retries) {
  if (expected_scale.empty()) throw PreconditionError("rubric scale is empty");
  JudgeRequest req{tpl.render(bindings), std::string(tags::kRubric)};
  return call_with_parse_retries(judge, req, parse_retries, "rubric rating " + tpl.name,
                                 [&](const std::string& raw) { return parse_rubric_rating(raw, expected_scale); });
}

}  // namespace wimpe
