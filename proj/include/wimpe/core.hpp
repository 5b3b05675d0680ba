#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wimpe/error.hpp"

namespace wimpe {

enum class TaskType { summarization, question_answering, multi_turn_conversation };

std::string_view to_string(TaskType t);
TaskType task_type_from_string(std::string_view s);

struct Instance {
  std::string id;
  std::string dataset;
  std::string domain;
  TaskType task_type = TaskType::question_answering;
  std::string context;
  std::string question;
  std::string reference_answer;

  bool operator==(const Instance&) const = default;
};

struct GeneratedResponse {
  std::string model_id;
  std::string text;

  // Unicode code points in `text`; invalid UTF-8 bytes count one each.
  std::size_t char_length() const;

  bool operator==(const GeneratedResponse&) const = default;
};

struct ScoringPoint {
  int index = 0;  // 1-based
  std::string text;
  int weight = 1;  // 1 minor, 2 moderate, 3 critical

  bool operator==(const ScoringPoint&) const = default;
};

enum class ErrorType {
  missing_key_information,
  vague_or_indirect_answer,
  wrong_information,
  irrelevant_response,
  other,
};

inline constexpr ErrorType kAllErrorTypes[] = {
    ErrorType::missing_key_information, ErrorType::vague_or_indirect_answer,
    ErrorType::wrong_information, ErrorType::irrelevant_response, ErrorType::other};

std::string_view to_string(ErrorType t);
ErrorType error_type_from_string(std::string_view s);

struct PointAssessment {
  int point_index = 0;
  double alignment = 0.0;  // 0, 0.5 or 1
  std::string explanation;
  std::optional<ErrorType> error_type;  // unset when alignment == 1

  bool operator==(const PointAssessment&) const = default;
};

struct PenaltyAssessment {
  int point_index = 0;
  double penalty = 0.0;  // 0 or 1
  std::string explanation;

  bool operator==(const PenaltyAssessment&) const = default;
};

// Canonical score names.
namespace score_names {
inline constexpr std::string_view kWpa = "WPA";
inline constexpr std::string_view kPcp = "PCP";
inline constexpr std::string_view kCoarse3 = "Coarse3";
inline constexpr std::string_view kMerge = "Merge";
inline constexpr std::string_view kBleu = "BLEU";
inline constexpr std::string_view kRougeL = "ROUGE-L";
}  // namespace score_names

struct InstanceEvaluation {
  std::string instance_id;
  std::string model_id;
  std::map<std::string, double> scores;
  std::optional<std::vector<PointAssessment>> point_assessments;
  std::optional<std::vector<PenaltyAssessment>> penalty_assessments;
  // Metric name -> failure message for metrics that could not be computed.
  std::map<std::string, std::string> failures;

  bool operator==(const InstanceEvaluation&) const = default;
};

// Throws ValidationError when a score is non-finite or a bounded score
// leaves [0, 1].
void validate_evaluation(const InstanceEvaluation& ev);

bool is_alignment_value(double m);
bool is_penalty_value(double p);
bool is_point_weight(int w);

// One dataset line: an instance and the candidate responses to judge.
struct Record {
  Instance instance;
  std::vector<GeneratedResponse> responses;

  bool operator==(const Record&) const = default;
};

void validate_instance(const Instance& inst, const std::vector<GeneratedResponse>& responses);

// Parses one JSONL record. `line_no` is only used in error messages.
Record parse_record(std::string_view line, std::size_t line_no);
std::string serialize_record(const Record& r);

std::vector<Record> load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const std::vector<Record>& records);

std::size_t utf8_length(std::string_view s);

}  // namespace wimpe
