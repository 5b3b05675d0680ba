#include <algorithm>
#include <fstream>

#include "wimpe/json_io.hpp"
#include "wimpe/pipeline.hpp"
#include "wimpe/text.hpp"

namespace wimpe {

using nlohmann::json;

namespace {

const std::map<std::string, std::string_view>& builtin_metrics() {
  static const std::map<std::string, std::string_view> m = {
      {"bleu", score_names::kBleu},    {"rouge_l", score_names::kRougeL}, {"wpa", score_names::kWpa},
      {"pcp", score_names::kPcp},      {"coarse3", score_names::kCoarse3}, {"merge", score_names::kMerge},
  };
  return m;
}

// Calls fn(json, line_no) for every non-blank line.
template <class Fn>
void for_each_jsonl(const fs::path& path, Fn fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw DatasetError(line_no, "invalid JSON in store " + path.string());
    try {
      fn(j);
    } catch (const json::exception& e) {
      throw DatasetError(line_no, std::string("malformed row in ") + path.string() + ": " + e.what());
    }
  }
}

json failure_json(const StageFailure& f) {
  json j{{"stage", f.stage}, {"instance_id", f.instance_id}, {"error", f.error}};
  if (!f.model_id.empty()) j["model_id"] = f.model_id;
  if (!f.metric.empty()) j["metric"] = f.metric;
  return j;
}

}  // namespace

std::string score_name_for(const std::string& metric) {
  auto it = builtin_metrics().find(metric);
  return it == builtin_metrics().end() ? metric : std::string(it->second);
}

bool is_builtin_metric(const std::string& metric) { return builtin_metrics().contains(metric); }

void PipelineConfig::validate() const {
  if (dataset.empty()) throw ConfigError("no dataset given");
  if (out_dir.empty()) throw ConfigError("no output directory given");
  if (judge_kind != "mock" && judge_kind != "http") {
    throw ConfigError("judge must be \"http\" or \"mock\", got \"" + judge_kind + "\"");
  }
  if (mock_behavior != "echo" && mock_behavior != "scripted") {
    throw ConfigError("mock behavior must be \"echo\" or \"scripted\"");
  }
  if (judge_kind == "mock" && mock_behavior == "scripted" && mock_fixtures.empty()) {
    throw ConfigError("the scripted mock judge needs a fixtures file");
  }
  if (parse_retries < 0) throw ConfigError("parse retries must be >= 0");
  if (length_bins < 1) throw ConfigError("need at least one length bin");
  if (rubric_scale.empty()) throw ConfigError("rubric scale is empty");
  judge.validate();
  star.validate();
  merge.validate();
  std::set<std::string> seen;
  for (const auto& m : metrics) {
    if (m.empty()) throw ConfigError("empty metric name");
    if (!seen.insert(m).second) throw ConfigError("metric " + m + " listed twice");
  }
  const bool want_merge = seen.contains("merge");
  if (want_merge && !seen.contains("coarse3")) throw ConfigError("metric merge requires coarse3 in the same run");
  if (want_merge && !seen.contains("wpa")) throw ConfigError("metric merge requires wpa in the same run");
  static const std::set<std::string> kStudies = {"correlation", "ablation_scale", "ablation_weights",
                                                 "noise",       "length_bins",    "errors"};
  for (const auto& s : studies) {
    if (!kStudies.contains(s)) throw ConfigError("unknown study \"" + s + "\"");
  }
}

json PipelineConfig::to_json() const {
  json j;
  j["dataset"] = dataset.generic_string();
  j["out_dir"] = out_dir.generic_string();
  j["cache_dir"] = cache_dir.generic_string();
  j["templates_dir"] = templates_dir.generic_string();
  j["judge"] = judge_kind;
  j["endpoint"] = judge.endpoint_url;
  j["model"] = judge.model_name;
  j["temperature"] = judge.temperature;
  j["max_retries"] = judge.max_retries;
  j["timeout_ms"] = judge.timeout.count();
  j["api_key_env"] = judge.api_key_env;
  j["max_tokens"] = judge.max_tokens ? json(*judge.max_tokens) : json(nullptr);
  j["backoff_initial_ms"] = judge.backoff_initial.count();
  j["workers"] = judge.workers;
  j["mock_behavior"] = mock_behavior;
  j["mock_fixtures"] = mock_fixtures.generic_string();
  j["seed"] = seed;
  j["parse_retries"] = parse_retries;
  j["metrics"] = metrics;
  j["rubric_scale"] = rubric_scale;
  j["judge_error_types"] = judge_error_types;
  j["groups"] = star.num_groups;
  j["offsets"] = star.offsets;
  j["candidates"] = star.expected_candidates;
  j["include_context"] = star.include_context;
  j["lambda_m"] = merge.lambda_m;
  j["studies"] = studies;
  j["sigma_grid"] = sigma_grid;
  j["length_bins"] = length_bins;
  return j;
}

// ---- manifest ----

json RunManifest::to_json() const {
  json fails = json::array();
  for (const auto& f : failures) fails.push_back(failure_json(f));
  return json{{"run_id", run_id},
              {"config_snapshot", config_snapshot},
              {"dataset_path", dataset_path},
              {"stages_completed", stages_completed},
              {"judge_model", judge_model},
              {"seed", seed},
              {"started", started},
              {"finished", finished},
              {"failures", fails}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  m.run_id = j.value("run_id", "");
  m.config_snapshot = j.value("config_snapshot", json::object());
  m.dataset_path = j.value("dataset_path", "");
  m.stages_completed = j.value("stages_completed", std::vector<std::string>{});
  m.judge_model = j.value("judge_model", "");
  m.seed = j.value("seed", std::uint64_t{0});
  m.started = j.value("started", "");
  m.finished = j.value("finished", "");
  for (const auto& f : j.value("failures", json::array())) {
    m.failures.push_back({f.value("stage", ""), f.value("instance_id", ""), f.value("model_id", ""),
                          f.value("metric", ""), f.value("error", "")});
  }
  return m;
}

RunManifest RunManifest::load_or_new(const PipelineConfig& cfg) {
  const fs::path p = manifest_path(cfg);
  if (fs::exists(p)) {
    std::ifstream in(p, std::ios::binary);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ConfigError("unreadable manifest " + p.string());
    return from_json(j);
  }
  RunManifest m;
  m.started = utc_timestamp_now();
  return m;
}

void RunManifest::save(const fs::path& out_dir) const {
  fs::create_directories(out_dir);
  const fs::path p = out_dir / "manifest.json";
  const fs::path tmp = out_dir / "manifest.json.tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << to_json().dump(2) << '\n';
    if (!out) throw Error("cannot write " + tmp.string());
  }
  fs::rename(tmp, p);
}

void RunManifest::begin_stage(const std::string& stage, const PipelineConfig& cfg) {
  config_snapshot = cfg.to_json();
  run_id = sha256_hex(dump_canonical(config_snapshot)).substr(0, 16);
  dataset_path = cfg.dataset.generic_string();
  judge_model = cfg.judge_kind == "mock" ? "mock-judge" : cfg.judge.model_name;
  seed = cfg.seed;
  if (started.empty()) started = utc_timestamp_now();
  std::erase(stages_completed, stage);
  std::erase_if(failures, [&](const StageFailure& f) { return f.stage == stage; });
}

void RunManifest::end_stage(const std::string& stage, std::vector<StageFailure> stage_failures) {
  stages_completed.push_back(stage);
  for (auto& f : stage_failures) failures.push_back(std::move(f));
  finished = utc_timestamp_now();
}

// ---- stores ----

fs::path points_store(const PipelineConfig& cfg) { return cfg.out_dir / "points.jsonl"; }
fs::path evaluations_store(const PipelineConfig& cfg) { return cfg.out_dir / "evaluations.jsonl"; }
fs::path labels_store(const PipelineConfig& cfg) { return cfg.out_dir / "labels.jsonl"; }
fs::path reports_dir(const PipelineConfig& cfg) { return cfg.out_dir / "reports"; }
fs::path manifest_path(const PipelineConfig& cfg) { return cfg.out_dir / "manifest.json"; }

std::map<std::string, std::vector<ScoringPoint>> load_points(const fs::path& path) {
  std::map<std::string, std::vector<ScoringPoint>> out;
  for_each_jsonl(path, [&](const json& j) {
    out.insert_or_assign(j.at("instance_id").get<std::string>(), j.at("points").get<std::vector<ScoringPoint>>());
  });
  return out;
}

std::map<std::pair<std::string, std::string>, InstanceEvaluation> load_evaluations(const fs::path& path) {
  std::map<std::pair<std::string, std::string>, InstanceEvaluation> out;
  for_each_jsonl(path, [&](const json& j) {
    auto row = j.get<InstanceEvaluation>();
    auto [it, fresh] = out.try_emplace({row.instance_id, row.model_id}, row);
    if (fresh) return;
    InstanceEvaluation& acc = it->second;
    for (const auto& [name, v] : row.scores) {
      acc.scores.insert_or_assign(name, v);
      acc.failures.erase(name);
    }
    for (const auto& [name, why] : row.failures) acc.failures.insert_or_assign(name, why);
    if (row.point_assessments) acc.point_assessments = row.point_assessments;
    if (row.penalty_assessments) acc.penalty_assessments = row.penalty_assessments;
  });
  return out;
}

std::vector<StratifiedRanking> load_labels(const fs::path& path) {
  std::vector<StratifiedRanking> out;
  for_each_jsonl(path, [&](const json& j) {
    StratifiedRanking r;
    r.instance_id = j.at("instance_id").get<std::string>();
    r.offset = j.at("offset").get<int>();
    r.selected_indices = j.at("selected_indices").get<std::vector<int>>();
    r.selected_model_ids = j.at("selected_model_ids").get<std::vector<std::string>>();
    out.push_back(std::move(r));
  });
  return out;
}

// ---- judge wiring ----

std::shared_ptr<Judge> make_judge(const PipelineConfig& cfg) {
  std::shared_ptr<Judge> backend;
  if (cfg.judge_kind == "mock") {
    const MockBehavior behavior = cfg.mock_behavior == "scripted" ? MockBehavior::scripted : MockBehavior::echo_fixture;
    FixtureTable fixtures;
    if (!cfg.mock_fixtures.empty()) fixtures = FixtureTable::load_jsonl(cfg.mock_fixtures);
    backend = std::make_shared<MockJudge>(cfg.seed, behavior, std::move(fixtures));
  } else {
    backend = std::make_shared<HttpJudge>(cfg.judge);
  }
  if (cfg.cache_dir.empty()) return backend;
  return std::make_shared<CachedJudge>(backend, std::make_shared<ResponseCache>(cfg.cache_dir));
}

}  // namespace wimpe
