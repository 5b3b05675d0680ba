// wimpe: point-wise evaluation pipeline.
//
//   wimpe extract-points --dataset data.jsonl --out run/
//   wimpe evaluate --dataset data.jsonl --out run/ --metrics wpa,pcp,coarse3,merge
//   wimpe star --dataset data.jsonl --out run/ --offsets 1,2
//   wimpe analyze --dataset data.jsonl --out run/ --study correlation --study noise
//   wimpe report --out run/
//
// Every flag can also come from --config (key = value lines).

#include <iostream>

#include <CLI11.hpp>

#include "wimpe/pipeline.hpp"

int main(int argc, char** argv) {
  using namespace wimpe;
  PipelineConfig cfg;
  std::string dataset, out = cfg.out_dir.string(), cache_dir, templates_dir, fixtures;
  long long timeout_ms = cfg.judge.timeout.count();
  long long backoff_ms = cfg.judge.backoff_initial.count();
  int max_tokens = 0;
  std::vector<double> rubric_scale(cfg.rubric_scale.begin(), cfg.rubric_scale.end());

  CLI::App app{"Point-wise LLM-judge evaluation pipeline"};
  app.set_config("--config", "", "Configuration file (key = value)");
  app.fallthrough();
  app.require_subcommand(1);

  app.add_option("--dataset", dataset, "Dataset JSONL");
  app.add_option("--out", out, "Run directory for stores, manifest and reports")->capture_default_str();
  app.add_option("--cache-dir", cache_dir, "Persistent judge response cache");
  app.add_option("--templates-dir", templates_dir, "Prompt overrides and rubric templates (<name>.txt)");
  app.add_option("--judge", cfg.judge_kind, "Judge backend")->check(CLI::IsMember({"http", "mock"}))->capture_default_str();
  app.add_option("--endpoint", cfg.judge.endpoint_url, "Chat-completions URL")->capture_default_str();
  app.add_option("--model", cfg.judge.model_name, "Judge model")->capture_default_str();
  app.add_option("--temperature", cfg.judge.temperature, "Judge temperature")->capture_default_str();
  app.add_option("--max-retries", cfg.judge.max_retries, "Transport retries per call")->capture_default_str();
  app.add_option("--timeout-ms", timeout_ms, "Per-request timeout")->capture_default_str();
  app.add_option("--backoff-ms", backoff_ms, "Initial retry backoff")->capture_default_str();
  app.add_option("--api-key-env", cfg.judge.api_key_env, "Environment variable holding the API key")
      ->capture_default_str();
  app.add_option("--max-tokens", max_tokens, "Completion token cap (0: none)");
  app.add_option("--workers", cfg.judge.workers, "Concurrent judge calls")->capture_default_str();
  app.add_option("--mock-behavior", cfg.mock_behavior, "Mock judge mode")
      ->check(CLI::IsMember({"echo", "scripted"}))
      ->capture_default_str();
  app.add_option("--fixtures", fixtures, "Scripted mock fixtures JSONL");
  app.add_option("--seed", cfg.seed, "Seed for every randomized step")->capture_default_str();
  app.add_option("--parse-retries", cfg.parse_retries, "Re-asks after unparseable judge output")->capture_default_str();
  app.add_option("--metrics", cfg.metrics, "bleu,rouge_l,wpa,pcp,coarse3,merge or a rubric name")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--rubric-scale", rubric_scale, "Allowed ratings for rubric metrics")->delimiter(',');
  app.add_flag("--judge-error-types", cfg.judge_error_types, "Classify error types with the judge");
  app.add_option("--groups", cfg.star.num_groups, "Stratification groups")->capture_default_str();
  app.add_option("--offsets", cfg.star.offsets, "Position picked inside each group (1-based)")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--candidates", cfg.star.expected_candidates, "Responses per instance")->capture_default_str();
  app.add_flag("--include-context", cfg.star.include_context, "Show instance context to the ranking judge");
  app.add_option("--lambda-m", cfg.merge.lambda_m, "Merge weight of the coarse score")->capture_default_str();
  app.add_option("--study", cfg.studies, "correlation, ablation_scale, ablation_weights, noise, length_bins, errors")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--sigma-grid", cfg.sigma_grid, "Noise levels")->delimiter(',');
  app.add_option("--length-bins", cfg.length_bins, "Number of length bins")->capture_default_str();

  auto* extract = app.add_subcommand("extract-points", "Generate weighted scoring points");
  auto* evaluate = app.add_subcommand("evaluate", "Score every response");
  auto* star = app.add_subcommand("star", "Build stratified pseudo-label rankings");
  auto* analyze = app.add_subcommand("analyze", "Run meta-evaluation studies");
  auto* report = app.add_subcommand("report", "Summarize analysis reports as markdown");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitFatal;
  }

  cfg.dataset = dataset;
  cfg.out_dir = out;
  cfg.cache_dir = cache_dir;
  cfg.templates_dir = templates_dir;
  cfg.mock_fixtures = fixtures;
  cfg.judge.timeout = std::chrono::milliseconds(timeout_ms);
  cfg.judge.backoff_initial = std::chrono::milliseconds(backoff_ms);
  if (max_tokens > 0) cfg.judge.max_tokens = max_tokens;
  cfg.rubric_scale = {rubric_scale.begin(), rubric_scale.end()};

  try {
    int rc = kExitOk;
    if (report->parsed()) {
      rc = cmd_report(cfg);
    } else if (analyze->parsed()) {
      rc = cmd_analyze(cfg);
    } else {
      cfg.validate();
      auto judge = make_judge(cfg);
      if (extract->parsed()) rc = cmd_extract_points(cfg, *judge);
      else if (evaluate->parsed()) rc = cmd_evaluate(cfg, *judge);
      else if (star->parsed()) rc = cmd_star(cfg, *judge);
    }
    if (rc == kExitPartial) {
      std::cerr << "wimpe: some items failed; see " << manifest_path(cfg).string() << "\n";
    }
    return rc;
  } catch (const std::exception& e) {
    std::cerr << "wimpe: error: " << e.what() << "\n";
    return kExitFatal;
  }
}
