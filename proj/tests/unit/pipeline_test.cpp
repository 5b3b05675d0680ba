#include <doctest.h>

#include <fstream>
#include <sstream>

#include "temp_dir.hpp"
#include "wimpe/json_io.hpp"
#include "wimpe/pipeline.hpp"
#include "wimpe/points.hpp"

using namespace wimpe;

namespace {

const fs::path kMini = fs::path(WIMPE_FIXTURES_DIR) / "mini.jsonl";

PipelineConfig base_config(const fs::path& out) {
  PipelineConfig cfg;
  cfg.dataset = kMini;
  cfg.out_dir = out;
  return cfg;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> report_files(const PipelineConfig& cfg) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(reports_dir(cfg))) out[e.path().filename().string()] = slurp(e.path());
  return out;
}

void full_run(const PipelineConfig& cfg) {
  MockJudge judge(cfg.seed, MockBehavior::echo_fixture);
  REQUIRE(cmd_extract_points(cfg, judge) == kExitOk);
  REQUIRE(cmd_evaluate(cfg, judge) == kExitOk);
  REQUIRE(cmd_star(cfg, judge) == kExitOk);
  REQUIRE(cmd_analyze(cfg) == kExitOk);
  REQUIRE(cmd_report(cfg) == kExitOk);
}

FixtureTable good_points() {
  FixtureTable f;
  f.add("points", "*", "- [[first]] | ((3))\n- [[second]] | ((1))");
  return f;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("extract-points persists one list per instance and resumes for free") {
    testing_support::TempDir dir("pipe");
    const auto cfg = base_config(dir / "run");
    MockJudge judge(1, MockBehavior::scripted, good_points());
    CHECK(cmd_extract_points(cfg, judge) == kExitOk);
    CHECK(line_count(points_store(cfg)) == 5);
    CHECK(load_points(points_store(cfg)).size() == 5);
    CHECK(judge.calls() == 5);

    MockJudge again(1, MockBehavior::scripted, good_points());
    CHECK(cmd_extract_points(cfg, again) == kExitOk);
    CHECK(again.calls() == 0);
    CHECK(line_count(points_store(cfg)) == 5);
  }

  TEST_CASE("one failing instance gives a partial exit and four lists") {
    testing_support::TempDir dir("pipe");
    const auto cfg = base_config(dir / "run");
    const auto records = load_dataset(kMini);
    const auto& bad = records[2].instance;
    FixtureTable f = good_points();
    f.add("points", request_hash("mock-judge", 0.5, render_points_prompt(bad.question, bad.reference_answer)),
          "I cannot do that.");
    MockJudge judge(1, MockBehavior::scripted, f);
    CHECK(cmd_extract_points(cfg, judge) == kExitPartial);
    const auto pts = load_points(points_store(cfg));
    CHECK(pts.size() == 4);
    CHECK(pts.count(bad.id) == 0);

    const auto manifest = RunManifest::from_json(nlohmann::json::parse(slurp(manifest_path(cfg))));
    REQUIRE(manifest.failures.size() == 1);
    CHECK(manifest.failures[0].instance_id == bad.id);
    CHECK(manifest.failures[0].stage == "extract-points");

    // A rerun with a healthy judge fills the gap only.
    MockJudge healthy(1, MockBehavior::scripted, good_points());
    CHECK(cmd_extract_points(cfg, healthy) == kExitOk);
    CHECK(healthy.calls() == 1);
    CHECK(load_points(points_store(cfg)).size() == 5);
  }

  TEST_CASE("token baselines need no judge") {
    testing_support::TempDir dir("pipe");
    auto cfg = base_config(dir / "run");
    cfg.metrics = {"bleu", "rouge_l"};
    MockJudge judge(1, MockBehavior::scripted);
    CHECK(cmd_evaluate(cfg, judge) == kExitOk);
    CHECK(judge.calls() == 0);
    const auto evals = load_evaluations(evaluations_store(cfg));
    CHECK(evals.size() == 50);
    for (const auto& [key, ev] : evals) {
      CHECK(ev.scores.count("BLEU") == 1);
      CHECK(ev.scores.count("ROUGE-L") == 1);
    }
  }

  TEST_CASE("judge metrics are all populated and merge is the affine blend") {
    testing_support::TempDir dir("pipe");
    auto cfg = base_config(dir / "run");
    cfg.metrics = {"wpa", "pcp", "coarse3", "merge"};
    MockJudge judge(cfg.seed, MockBehavior::echo_fixture);
    REQUIRE(cmd_extract_points(cfg, judge) == kExitOk);
    REQUIRE(cmd_evaluate(cfg, judge) == kExitOk);
    const auto evals = load_evaluations(evaluations_store(cfg));
    CHECK(evals.size() == 50);
    for (const auto& [key, ev] : evals) {
      REQUIRE(ev.scores.count("WPA") == 1);
      REQUIRE(ev.scores.count("PCP") == 1);
      REQUIRE(ev.scores.count("Coarse3") == 1);
      REQUIRE(ev.scores.count("Merge") == 1);
      CHECK(ev.scores.at("Merge") == 0.2 * ev.scores.at("Coarse3") + 0.8 * ev.scores.at("WPA"));
      CHECK(ev.failures.empty());
      for (const auto& a : *ev.point_assessments) CHECK(a.error_type.has_value() == (a.alignment < 1.0));
    }
  }

  TEST_CASE("missing points are named; merge needs coarse3") {
    testing_support::TempDir dir("pipe");
    auto cfg = base_config(dir / "run");
    cfg.metrics = {"wpa"};
    MockJudge judge(1, MockBehavior::echo_fixture);
    CHECK_THROWS_WITH_AS(cmd_evaluate(cfg, judge), doctest::Contains("q1"), PreconditionError);

    cfg.metrics = {"wpa", "merge"};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.metrics = {"bleu", "bleu"};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.metrics = {"bleu"};
    cfg.studies = {"astrology"};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }

  TEST_CASE("analyze names its missing inputs") {
    testing_support::TempDir dir("pipe");
    const auto cfg = base_config(dir / "run");
    CHECK_THROWS_WITH_AS(cmd_analyze(cfg), doctest::Contains("evaluate"), PreconditionError);
  }

  TEST_CASE("two runs with the same seed write identical reports, whatever the worker count") {
    testing_support::TempDir dir("pipe");
    auto a = base_config(dir / "a");
    auto b = base_config(dir / "b");
    a.studies = b.studies = {"correlation", "ablation_scale", "ablation_weights", "noise", "length_bins", "errors"};
    a.judge.workers = 1;
    b.judge.workers = 4;
    full_run(a);
    full_run(b);
    const auto ra = report_files(a);
    const auto rb = report_files(b);
    CHECK(ra.size() >= 10);
    CHECK(ra == rb);
    CHECK(slurp(evaluations_store(a)) == slurp(evaluations_store(b)));
    CHECK(slurp(labels_store(a)) == slurp(labels_store(b)));
  }

  TEST_CASE("an interrupted run resumes to the same reports") {
    testing_support::TempDir dir("pipe");
    const auto whole = base_config(dir / "whole");
    full_run(whole);

    auto part = base_config(dir / "part");
    MockJudge judge(part.seed, MockBehavior::echo_fixture);
    REQUIRE(cmd_extract_points(part, judge) == kExitOk);
    auto first = part;
    first.metrics = {"bleu", "wpa"};
    REQUIRE(cmd_evaluate(first, judge) == kExitOk);
    // Later stage config supersedes; only the missing metrics are computed.
    MockJudge judge2(part.seed, MockBehavior::echo_fixture);
    REQUIRE(cmd_evaluate(part, judge2) == kExitOk);
    CHECK(judge2.calls_for("wpa") == 0);
    REQUIRE(cmd_star(part, judge2) == kExitOk);
    REQUIRE(cmd_analyze(part) == kExitOk);
    REQUIRE(cmd_report(part) == kExitOk);
    CHECK(report_files(part) == report_files(whole));
  }

  TEST_CASE("manifest records stages and never a key") {
    testing_support::TempDir dir("pipe");
    auto cfg = base_config(dir / "run");
    cfg.judge.api_key_env = "WIMPE_TEST_DUMMY_KEY";
    ::setenv("WIMPE_TEST_DUMMY_KEY", "dummy-not-a-secret-123", 1);
    full_run(cfg);
    const std::string text = slurp(manifest_path(cfg));
    CHECK(text.find("dummy-not-a-secret-123") == std::string::npos);
    CHECK(text.find("WIMPE_TEST_DUMMY_KEY") != std::string::npos);
    const auto m = RunManifest::from_json(nlohmann::json::parse(text));
    CHECK(m.stages_completed ==
          std::vector<std::string>{"extract-points", "evaluate", "star", "analyze", "report"});
    CHECK(m.seed == cfg.seed);
    CHECK(m.run_id.size() == 16);
    for (const auto& [name, body] : report_files(cfg)) CHECK(body.find("dummy-not-a-secret-123") == std::string::npos);
    ::unsetenv("WIMPE_TEST_DUMMY_KEY");
  }
}
