#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "wimpe/core.hpp"
#include "wimpe/json_io.hpp"

namespace wimpe {

using nlohmann::json;

std::string_view to_string(TaskType t) {
  switch (t) {
    case TaskType::summarization: return "summarization";
    case TaskType::question_answering: return "question_answering";
    case TaskType::multi_turn_conversation: return "multi_turn_conversation";
  }
  return "question_answering";
}

TaskType task_type_from_string(std::string_view s) {
  if (s == "summarization") return TaskType::summarization;
  if (s == "question_answering") return TaskType::question_answering;
  if (s == "multi_turn_conversation") return TaskType::multi_turn_conversation;
  throw ValidationError("unknown task_type \"" + std::string(s) + "\"");
}

std::string_view to_string(ErrorType t) {
  switch (t) {
    case ErrorType::missing_key_information: return "missing_key_information";
    case ErrorType::vague_or_indirect_answer: return "vague_or_indirect_answer";
    case ErrorType::wrong_information: return "wrong_information";
    case ErrorType::irrelevant_response: return "irrelevant_response";
    case ErrorType::other: return "other";
  }
  return "other";
}

ErrorType error_type_from_string(std::string_view s) {
  for (ErrorType t : kAllErrorTypes) {
    if (to_string(t) == s) return t;
  }
  throw ValidationError("unknown error_type \"" + std::string(s) + "\"");
}

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if (c >= 0xF0 && c <= 0xF4) {
      len = 4;
    } else if (c >= 0xE0) {
      len = 3;
    } else if (c >= 0xC2 && c <= 0xDF) {
      len = 2;
    }
    // Only consume a multi-byte sequence if every continuation byte is there.
    if (len > 1) {
      if (i + len > s.size()) {
        len = 1;
      } else {
        for (std::size_t k = 1; k < len; ++k) {
          if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) {
            len = 1;
            break;
          }
        }
      }
    }
    i += len;
    ++n;
  }
  return n;
}

std::size_t GeneratedResponse::char_length() const { return utf8_length(text); }

bool is_alignment_value(double m) { return m == 0.0 || m == 0.5 || m == 1.0; }
bool is_penalty_value(double p) { return p == 0.0 || p == 1.0; }
bool is_point_weight(int w) { return w >= 1 && w <= 3; }

void validate_evaluation(const InstanceEvaluation& ev) {
  for (const auto& [name, value] : ev.scores) {
    if (!std::isfinite(value)) {
      throw ValidationError("score " + name + " is not finite");
    }
    const bool bounded = name == score_names::kWpa || name == score_names::kPcp ||
                         name == score_names::kCoarse3 || name == score_names::kMerge;
    if (bounded && (value < 0.0 || value > 1.0)) {
      throw ValidationError("score " + name + " outside [0,1]");
    }
  }
}

void validate_instance(const Instance& inst, const std::vector<GeneratedResponse>& responses) {
  if (inst.id.empty()) throw ValidationError("id empty");
  if (inst.question.empty()) throw ValidationError("question empty");
  if (inst.reference_answer.empty()) throw ValidationError("reference_answer empty");
  std::set<std::string> seen;
  for (const auto& r : responses) {
    if (r.model_id.empty()) {
      throw ValidationError("model_id empty in instance " + inst.id);
    }
    if (!seen.insert(r.model_id).second) {
      throw ValidationError("duplicate model_id \"" + r.model_id + "\" in instance " + inst.id);
    }
  }
}

namespace {

std::string required_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(std::string("missing field \"") + key + "\"");
  if (!it->is_string()) throw ValidationError(std::string("field \"") + key + "\" must be a string");
  return it->get<std::string>();
}

std::string optional_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_string()) throw ValidationError(std::string("field \"") + key + "\" must be a string");
  return it->get<std::string>();
}

}  // namespace

Record parse_record(std::string_view line, std::size_t line_no) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) throw DatasetError(line_no, "invalid JSON");
  if (!j.is_object()) throw DatasetError(line_no, "record must be a JSON object");
  try {
    Record r;
    r.instance.id = required_string(j, "id");
    r.instance.dataset = optional_string(j, "dataset");
    r.instance.domain = optional_string(j, "domain");
    const std::string task = optional_string(j, "task_type");
    if (!task.empty()) r.instance.task_type = task_type_from_string(task);
    r.instance.context = optional_string(j, "context");
    r.instance.question = required_string(j, "question");
    r.instance.reference_answer = required_string(j, "reference_answer");
    auto it = j.find("responses");
    if (it != j.end() && !it->is_null()) {
      if (!it->is_array()) throw ValidationError("field \"responses\" must be an array");
      for (const auto& item : *it) {
        if (!item.is_object()) throw ValidationError("each response must be an object");
        r.responses.push_back({required_string(item, "model_id"), required_string(item, "text")});
      }
    }
    validate_instance(r.instance, r.responses);
    return r;
  } catch (const ValidationError& e) {
    throw DatasetError(line_no, e.what());
  }
}

std::string serialize_record(const Record& r) {
  json j;
  j["id"] = r.instance.id;
  j["dataset"] = r.instance.dataset;
  j["domain"] = r.instance.domain;
  j["task_type"] = std::string(to_string(r.instance.task_type));
  j["context"] = r.instance.context;
  j["question"] = r.instance.question;
  j["reference_answer"] = r.instance.reference_answer;
  json responses = json::array();
  for (const auto& resp : r.responses) {
    responses.push_back({{"model_id", resp.model_id}, {"text", resp.text}});
  }
  j["responses"] = std::move(responses);
  return dump_canonical(j);
}

std::vector<Record> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset " + path.string());
  std::vector<Record> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Record r = parse_record(line, line_no);
    if (!ids.insert(r.instance.id).second) {
      throw DatasetError(line_no, "duplicate instance id \"" + r.instance.id + "\"");
    }
    out.push_back(std::move(r));
  }
  return out;
}

void save_dataset(const std::filesystem::path& path, const std::vector<Record>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write dataset " + path.string());
  for (const auto& r : records) out << serialize_record(r) << '\n';
}

// ---- json bindings ----

void to_json(json& j, const ScoringPoint& p) {
  j = json{{"index", p.index}, {"text", p.text}, {"weight", p.weight}};
}

void from_json(const json& j, ScoringPoint& p) {
  j.at("index").get_to(p.index);
  j.at("text").get_to(p.text);
  j.at("weight").get_to(p.weight);
}

void to_json(json& j, const PointAssessment& a) {
  j = json{{"point_index", a.point_index},
           {"alignment", a.alignment},
           {"explanation", a.explanation}};
  if (a.error_type) j["error_type"] = std::string(to_string(*a.error_type));
}

void from_json(const json& j, PointAssessment& a) {
  j.at("point_index").get_to(a.point_index);
  j.at("alignment").get_to(a.alignment);
  j.at("explanation").get_to(a.explanation);
  a.error_type.reset();
  if (auto it = j.find("error_type"); it != j.end() && !it->is_null()) {
    a.error_type = error_type_from_string(it->get<std::string>());
  }
}

void to_json(json& j, const PenaltyAssessment& a) {
  j = json{{"point_index", a.point_index}, {"penalty", a.penalty}, {"explanation", a.explanation}};
}

void from_json(const json& j, PenaltyAssessment& a) {
  j.at("point_index").get_to(a.point_index);
  j.at("penalty").get_to(a.penalty);
  j.at("explanation").get_to(a.explanation);
}

void to_json(json& j, const InstanceEvaluation& e) {
  j = json{{"instance_id", e.instance_id}, {"model_id", e.model_id}, {"scores", e.scores}};
  if (e.point_assessments) j["point_assessments"] = *e.point_assessments;
  if (e.penalty_assessments) j["penalty_assessments"] = *e.penalty_assessments;
  if (!e.failures.empty()) j["failures"] = e.failures;
}

void from_json(const json& j, InstanceEvaluation& e) {
  j.at("instance_id").get_to(e.instance_id);
  j.at("model_id").get_to(e.model_id);
  e.scores = j.value("scores", std::map<std::string, double>{});
  e.point_assessments.reset();
  e.penalty_assessments.reset();
  if (auto it = j.find("point_assessments"); it != j.end()) {
    e.point_assessments = it->get<std::vector<PointAssessment>>();
  }
  if (auto it = j.find("penalty_assessments"); it != j.end()) {
    e.penalty_assessments = it->get<std::vector<PenaltyAssessment>>();
  }
  e.failures = j.value("failures", std::map<std::string, std::string>{});
}

std::string dump_canonical(const json& j) {
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

}  // namespace wimpe
