#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "wimpe/analysis.hpp"
#include "wimpe/core.hpp"
#include "wimpe/judge.hpp"
#include "wimpe/metrics.hpp"
#include "wimpe/star.hpp"

namespace wimpe {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFatal = 1;
inline constexpr int kExitPartial = 2;

// Everything a run depends on. Serialized into the manifest.
struct PipelineConfig {
  fs::path dataset;
  fs::path out_dir = "wimpe-run";
  fs::path cache_dir;      // empty: no response cache
  fs::path templates_dir;  // optional <name>.txt overrides and rubric prompts
  std::string judge_kind = "mock";  // mock | http
  JudgeConfig judge;
  std::string mock_behavior = "echo";  // echo | scripted
  fs::path mock_fixtures;
  std::uint64_t seed = 1234;
  int parse_retries = 2;
  std::vector<std::string> metrics = {"bleu", "rouge_l", "wpa", "pcp", "coarse3", "merge"};
  std::set<double> rubric_scale = {1, 2, 3, 4, 5};
  bool judge_error_types = false;
  StarConfig star;
  MergeConfig merge;
  std::vector<std::string> studies = {"correlation", "noise", "errors"};
  std::vector<double> sigma_grid = kDefaultSigmaGrid;
  int length_bins = 4;

  void validate() const;
  nlohmann::json to_json() const;  // no credentials: only the env var name
};

// Command-line metric name -> score name in the evaluation store. Names that
// are not built in are external rubrics and keep their own name.
std::string score_name_for(const std::string& metric);
bool is_builtin_metric(const std::string& metric);

struct StageFailure {
  std::string stage;
  std::string instance_id;
  std::string model_id;
  std::string metric;
  std::string error;
};

struct RunManifest {
  std::string run_id;
  nlohmann::json config_snapshot;
  std::string dataset_path;
  std::vector<std::string> stages_completed;
  std::string judge_model;
  std::uint64_t seed = 0;
  std::string started;
  std::string finished;
  std::vector<StageFailure> failures;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  static RunManifest load_or_new(const PipelineConfig& cfg);
  void save(const fs::path& out_dir) const;
  void begin_stage(const std::string& stage, const PipelineConfig& cfg);
  void end_stage(const std::string& stage, std::vector<StageFailure> stage_failures);
};

// ---- stores (append-only JSONL under out_dir) ----

fs::path points_store(const PipelineConfig& cfg);
fs::path evaluations_store(const PipelineConfig& cfg);
fs::path labels_store(const PipelineConfig& cfg);
fs::path reports_dir(const PipelineConfig& cfg);
fs::path manifest_path(const PipelineConfig& cfg);

std::map<std::string, std::vector<ScoringPoint>> load_points(const fs::path& path);

// Rows for the same (instance, model) are merged in file order: later scores
// and assessments win, and a later score clears an earlier failure.
std::map<std::pair<std::string, std::string>, InstanceEvaluation> load_evaluations(const fs::path& path);

std::vector<StratifiedRanking> load_labels(const fs::path& path);

// ---- judge wiring ----

std::shared_ptr<Judge> make_judge(const PipelineConfig& cfg);

// ---- stages. Each returns kExitOk or kExitPartial and throws on fatal errors. ----

int cmd_extract_points(const PipelineConfig& cfg, Judge& judge);
int cmd_evaluate(const PipelineConfig& cfg, Judge& judge);
int cmd_star(const PipelineConfig& cfg, Judge& judge);
int cmd_analyze(const PipelineConfig& cfg);
int cmd_report(const PipelineConfig& cfg);

}  // namespace wimpe
