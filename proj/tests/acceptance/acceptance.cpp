// Acceptance checks, one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "temp_dir.hpp"
#include "wimpe/analysis.hpp"
#include "wimpe/metrics.hpp"
#include "wimpe/pipeline.hpp"
#include "wimpe/points.hpp"
#include "wimpe/rng.hpp"
#include "wimpe/star.hpp"

using namespace wimpe;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int n, bool ok, const std::string& what) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", n, what.c_str());
  std::fflush(stdout);
  failures += !ok;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Runs a criterion body; an escaping exception is a failure, not a crash.
void run(int n, const std::function<std::pair<bool, std::string>()>& body) {
  try {
    auto [ok, what] = body();
    report(n, ok, what);
  } catch (const std::exception& e) {
    report(n, false, std::string("threw: ") + e.what());
  }
}

std::vector<ScoringPoint> pts_with(const std::vector<int>& w) {
  std::vector<ScoringPoint> out;
  for (std::size_t i = 0; i < w.size(); ++i) out.push_back({static_cast<int>(i + 1), "p", w[i]});
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::pair<bool, std::string> formula_oracles() {
  Rng rng(20240601);
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (int c = 0; c < 1000; ++c) {
    const int k = 1 + static_cast<int>(rng.below(20));
    std::vector<int> w;
    std::vector<double> m, p;
    std::vector<PointAssessment> as;
    std::vector<PenaltyAssessment> ps;
    for (int i = 0; i < k; ++i) {
      w.push_back(1 + static_cast<int>(rng.below(3)));
      m.push_back(static_cast<double>(rng.below(3)) / 2.0);
      p.push_back(static_cast<double>(rng.below(2)));
      as.push_back({i + 1, m.back(), "", std::nullopt});
      ps.push_back({i + 1, p.back(), ""});
    }
    const auto pts = pts_with(w);
    worst = std::max(worst, std::abs(compute_wpa(pts, as) - oracle::weighted_mean_loop(w, m)));
    worst = std::max(worst, std::abs(compute_pcp(pts, ps) - oracle::weighted_mean_loop(w, p)));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-12 && secs < 1.0,
          "WPA/PCP vs loop over 1000 configurations, max |diff| " + fmt(worst) + ", " + fmt(secs) + " s"};
}

std::pair<bool, std::string> merge_exactness() {
  Rng rng(7);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const double c = static_cast<double>(rng.below(3)) / 2.0;
    const double w = rng.uniform();
    mismatches += compute_merge(c, w, {0.2}) != 0.2 * c + 0.8 * w;
    mismatches += compute_merge(c, w, {0.0}) != w;
    mismatches += compute_merge(c, w, {1.0}) != c;
  }
  return {mismatches == 0, "merge bit-exact on 1000 pairs with lambda 0.2, 0 and 1 (" +
                               std::to_string(mismatches) + " mismatches)"};
}

std::pair<bool, std::string> star_indices() {
  const StarConfig cfg{3, {1, 2}, 10, false};
  cfg.validate();
  const auto a = stratified_select(10, cfg, 1);
  const auto b = stratified_select(10, cfg, 2);
  return {a == std::vector<int>{0, 4, 8} && b == std::vector<int>{1, 5, 9},
          "N=10, L=3 selects [0,4,8] and [1,5,9]"};
}

std::pair<bool, std::string> correlation_kernels() {
  int bad = 0;
  int checked = 0;
  for (int n = 3; n <= 6; ++n) {
    std::vector<int> ident(n);
    for (int i = 0; i < n; ++i) ident[i] = i + 1;
    std::vector<double> id_d(ident.begin(), ident.end());
    for (const auto& perm : oracle::all_permutations(n)) {
      const std::vector<double> pd(perm.begin(), perm.end());
      const auto s = spearman(pd, id_d);
      const auto k = kendall(pd, id_d);
      bad += !s || *s != oracle::spearman_no_ties(perm, ident);
      bad += !k || *k != oracle::kendall_no_ties(perm, ident);
      ++checked;
    }
    std::vector<double> rev(id_d.rbegin(), id_d.rend());
    bad += *spearman(id_d, id_d) != 1.0 || *kendall(id_d, id_d) != 1.0;
    bad += *spearman(id_d, rev) != -1.0 || *kendall(id_d, rev) != -1.0;
  }
  const std::vector<double> x = {1, 3, 2}, y = {1, 2, 3};
  bad += *spearman(x, y) != 0.5;
  bad += *kendall(x, y) != 1.0 / 3.0;
  return {bad == 0, std::to_string(checked) + " permutations exact, identity/reversal, rho=0.5 and tau=1/3 (" +
                        std::to_string(bad) + " mismatches)"};
}

std::pair<bool, std::string> grammar_totality() {
  Rng rng(5150);
  const auto pts = pts_with({3, 2, 1});
  const auto t0 = Clock::now();
  std::size_t structured = 0, parsed = 0, other = 0;
  auto attempt = [&](const auto& fn) {
    try {
      fn();
      ++parsed;
    } catch (const Error&) {
      ++structured;
    } catch (...) {
      ++other;
    }
  };
  for (int i = 0; i < 100000; ++i) {
    std::string s(rng.below(200), '\0');
    for (auto& ch : s) ch = static_cast<char>(rng.below(256));
    attempt([&] { parse_points(s); });
    attempt([&] { parse_alignment(s, pts); });
    attempt([&] { parse_penalties(s, pts); });
  }
  const double secs = seconds_since(t0);
  return {other == 0 && secs < 30.0,
          "1e5 random byte strings x 3 parsers: " + std::to_string(parsed) + " parsed, " +
              std::to_string(structured) + " structured errors, " + std::to_string(other) + " other, " +
              fmt(secs) + " s"};
}

std::pair<bool, std::string> grammar_fidelity() {
  std::vector<std::string> missing;
  auto need = [&](const char* tpl, const std::string& anchor) {
    if (default_template(tpl).body.find(anchor) == std::string::npos) missing.push_back(std::string(tpl) + ":" + anchor);
  };
  need("points", "[[Text of first scoring point]] | ((3))");
  need("wpa", "point-wise scores");
  need("pcp", "point-wise penalty scores");
  need("coarse3", "\"rating\"");

  FixtureTable f;
  f.add("points", "*",
        "- [[Text of first scoring point]] | ((3))\n- [[Text of second scoring point]] | ((2))\n"
        "- [[Text of third scoring point]] | ((1))");
  f.add("wpa", "*", R"({
    "point-wise scores": {
        "1": {
            "match_scores": 0.5 ,
            "explanation": "Justification for the assigned matching score",
            },
        "2": {
            "match_scores": 0 ,
            "explanation": "Justification for the assigned matching score",
            },
        "3": {
            "match_scores": 1 ,
            "explanation": "Justification for the assigned matching score",
            }
        }
    })");
  f.add("pcp", "*", R"({
    "point-wise penalty scores": {
        "1": {
            "penalty_scores": 0,
            "explanation": "Justification for the assigned penalty score",
            },
        "2": {
            "penalty_scores": 1,
            "explanation": "Justification for the assigned penalty score",
            },
        "3": {
            "penalty_scores": 0,
            "explanation": "Justification for the assigned penalty score",
            },
     }
 })");
  f.add("coarse3", "*", R"({
        "reason": "Explain which key information from the reference answer is covered, partially covered, or missing in the generated answer",
        "rating": 0.5
    })");
  MockJudge judge(1, MockBehavior::scripted, f);
  const auto pts = generate_points(judge, "q", "r");
  bool ok = pts.size() == 3 && pts[0].weight == 3 && pts[1].weight == 2 && pts[2].weight == 1 &&
            pts[0].text == "Text of first scoring point";
  const auto al = assess_alignment(judge, "q", pts, "answer");
  ok = ok && al.size() == 3 && al[0].alignment == 0.5 && al[1].alignment == 0.0 && al[2].alignment == 1.0;
  const auto pe = assess_conflicts(judge, "q", "r", pts, "answer");
  ok = ok && pe.size() == 3 && pe[0].penalty == 0.0 && pe[1].penalty == 1.0 && pe[2].penalty == 0.0;
  ok = ok && coarse3(judge, "q", "r", "answer").rating == 0.5;
  ok = ok && compute_wpa(pts, al) == 2.5 / 6.0;
  std::string what = "template anchors present and example judge outputs parse to expected values";
  for (const auto& m : missing) what += "; missing " + m;
  return {ok && missing.empty(), what};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> full_pipeline(const fs::path& out) {
  PipelineConfig cfg;
  cfg.dataset = fs::path(WIMPE_FIXTURES_DIR) / "mini.jsonl";
  cfg.out_dir = out;
  cfg.metrics = {"wpa", "pcp", "coarse3", "merge", "bleu", "rouge_l"};
  cfg.studies = {"correlation", "noise", "errors"};
  cfg.validate();
  const auto judge = make_judge(cfg);
  int rc = cmd_extract_points(cfg, *judge);
  rc = std::max(rc, cmd_evaluate(cfg, *judge));
  rc = std::max(rc, cmd_star(cfg, *judge));
  rc = std::max(rc, cmd_analyze(cfg));
  rc = std::max(rc, cmd_report(cfg));
  if (rc != kExitOk) throw Error("pipeline exited " + std::to_string(rc));
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(reports_dir(cfg))) files[e.path().filename().string()] = slurp(e.path());
  return files;
}

std::pair<bool, std::string> end_to_end() {
  testing_support::TempDir dir("accept");
  const auto t0 = Clock::now();
  const auto a = full_pipeline(dir / "run1");
  const auto b = full_pipeline(dir / "run2");
  const double secs = seconds_since(t0);
  const bool has_all = a.count("correlation.json") && a.count("noise.json") && a.count("errors.json");
  return {a == b && has_all && secs < 10.0,
          "two seeded mock runs give " + std::to_string(a.size()) + " byte-identical report files, " + fmt(secs) +
              " s total"};
}

// Quality in [0,1] observed through Gaussian noise and snapped to 0/0.5/1.
double quantized_view(Rng& rng, double quality, double sigma) {
  const double v = quality + sigma * rng.normal();
  return v < 1.0 / 3.0 ? 0.0 : v < 2.0 / 3.0 ? 0.5 : 1.0;
}

std::pair<bool, std::string> ablation_direction() {
  const std::uint64_t seed = PipelineConfig{}.seed;
  const double sigma = 0.25;
  const StarConfig star;
  ScoreTable wpa, coarse;
  std::vector<StratifiedRanking> labels;
  for (int i = 0; i < 200; ++i) {
    const std::string id = "s" + std::to_string(i);
    Rng rng = Rng::substream(seed, "synthetic:" + id);
    const int k = 3 + static_cast<int>(rng.below(6));
    std::vector<int> w;
    for (int p = 0; p < k; ++p) w.push_back(1 + static_cast<int>(rng.below(3)));
    const auto pts = pts_with(w);
    std::vector<std::pair<double, std::string>> by_quality;
    for (int r = 0; r < star.expected_candidates; ++r) {
      const std::string model = "m" + std::to_string(r);
      const double q = rng.uniform();
      by_quality.push_back({q, model});
      std::vector<PointAssessment> as;
      for (int p = 0; p < k; ++p) as.push_back({p + 1, quantized_view(rng, q, sigma), "", std::nullopt});
      wpa[{id, model}] = compute_wpa(pts, as);
      coarse[{id, model}] = quantized_view(rng, q, sigma);
    }
    std::sort(by_quality.begin(), by_quality.end(), std::greater<>());
    for (int off : star.offsets) {
      StratifiedRanking sr{id, off, stratified_select(star.expected_candidates, star, off), {}};
      for (int idx : sr.selected_indices) sr.selected_model_ids.push_back(by_quality[idx].second);
      labels.push_back(std::move(sr));
    }
  }
  const auto rw = instance_level_correlation("WPA", wpa, labels);
  const auto rc = instance_level_correlation("Coarse3", coarse, labels);
  const double sw = rw.mean_spearman.value_or(-2.0);
  const double sc = rc.mean_spearman.value_or(-2.0);
  return {sw > sc, "synthetic 200 instances, mean Spearman WPA " + fmt(sw) + " (" +
                       std::to_string(rw.excluded_count) + " tied) vs coarse 3-level " + fmt(sc) + " (" +
                       std::to_string(rc.excluded_count) + " tied)"};
}

std::pair<bool, std::string> noise_curve() {
  ScoreTable wide, mixed;
  std::vector<StratifiedRanking> labels;
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const std::string id = "n" + std::to_string(i);
    wide[{id, "x"}] = 1.0;
    wide[{id, "y"}] = 0.5;
    wide[{id, "z"}] = 0.0;
    for (const char* m : {"x", "y", "z"}) mixed[{id, m}] = rng.uniform();
    labels.push_back({id, 1, {0, 4, 8}, {"x", "y", "z"}});
  }
  const auto w = noise_robustness("wide", wide, labels, kDefaultSigmaGrid, 1234);
  const auto m = noise_robustness("mixed", mixed, labels, kDefaultSigmaGrid, 1234);
  const bool ok = w.mean_kendall_vs_original.size() == 7 && m.mean_kendall_vs_original.size() == 7 &&
                  w.mean_kendall_vs_original[0] == 1.0 && m.mean_kendall_vs_original[0] == 1.0 &&
                  w.mean_kendall_vs_original[1] == 1.0;
  std::string curve;
  for (double t : m.mean_kendall_vs_original) curve += " " + fmt(t);
  return {ok, "tau(sigma=0)=1 exactly, wide-gap tau(0.01)=" + fmt(w.mean_kendall_vs_original[1]) +
                  ", 7-point curve:" + curve};
}

std::pair<bool, std::string> token_baselines() {
  const std::string s = "The quick brown fox jumps over the lazy dog.";
  const double b = bleu(s, s);
  const double r = rouge_l(s, s);
  const double r67 = rouge_l("a b c d", "a c d");
  return {b == 1.0 && r == 1.0 && std::abs(r67 - 6.0 / 7.0) <= 1e-9,
          "self BLEU " + fmt(b) + ", self ROUGE-L " + fmt(r) + ", ROUGE-L(\"a b c d\",\"a c d\") " + fmt(r67)};
}

}  // namespace

int main() {
  run(1, formula_oracles);
  run(2, merge_exactness);
  run(3, star_indices);
  run(4, correlation_kernels);
  run(5, grammar_totality);
  run(6, grammar_fidelity);
  run(7, end_to_end);
  run(8, ablation_direction);
  run(9, noise_curve);
  run(10, token_baselines);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
