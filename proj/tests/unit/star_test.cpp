#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "wimpe/star.hpp"

using namespace wimpe;

namespace {

Instance inst(const std::string& id) { return {id, "ds", "", TaskType::question_answering, "", "Why?", "Because."}; }

std::vector<GeneratedResponse> responses(int n) {
  std::vector<GeneratedResponse> out;
  for (int i = 0; i < n; ++i) out.push_back({"m" + std::to_string(i), "answer " + std::to_string(i)});
  return out;
}

std::string labels_json(const std::vector<int>& positions) {
  std::string s = "[";
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (i) s += ", ";
    s += "\"R" + std::to_string(positions[i] + 1) + "\"";
  }
  return s + "]";
}

}  // namespace

TEST_SUITE("star") {
  TEST_CASE("default configuration: ten candidates, three groups") {
    const StarConfig cfg;
    CHECK(stratified_select(10, cfg, 1) == std::vector<int>{0, 4, 8});
    CHECK(stratified_select(10, cfg, 2) == std::vector<int>{1, 5, 9});
  }

  TEST_CASE("selection follows (l-1)*ceil(N/L) + n - 1") {
    for (int n_cand = 1; n_cand <= 30; ++n_cand) {
      for (int groups = 1; groups <= n_cand; ++groups) {
        const int stride = (n_cand + groups - 1) / groups;
        for (int off = 1; off <= stride; ++off) {
          StarConfig cfg{groups, {off}, n_cand, false};
          std::vector<int> want;
          bool fits = true;
          for (int l = 1; l <= groups; ++l) {
            want.push_back((l - 1) * stride + off - 1);
            fits = fits && want.back() < n_cand;
          }
          if (fits) {
            CHECK(stratified_select(n_cand, cfg, off) == want);
          } else {
            CHECK_THROWS_AS(stratified_select(n_cand, cfg, off), ConfigError);
          }
        }
      }
    }
  }

  TEST_CASE("bad offsets and group counts are configuration errors") {
    const StarConfig cfg;
    CHECK_THROWS_AS(stratified_select(10, cfg, 0), ConfigError);
    CHECK_THROWS_AS(stratified_select(10, cfg, 5), ConfigError);
    CHECK_THROWS_AS(stratified_select(10, cfg, 3), ConfigError);  // would need index 10
    CHECK_THROWS_AS(stratified_select(2, cfg, 1), ConfigError);
    CHECK_THROWS_AS((StarConfig{0, {1}, 10, false}.validate()), ConfigError);
    CHECK_THROWS_AS((StarConfig{3, {}, 10, false}.validate()), ConfigError);
    CHECK_THROWS_AS((StarConfig{3, {1, 1}, 10, false}.validate()), ConfigError);
    CHECK_THROWS_AS((StarConfig{3, {5}, 10, false}.validate()), ConfigError);
    CHECK_NOTHROW(StarConfig{}.validate());
  }

  TEST_CASE("ranking parser wants a permutation of the labels") {
    CHECK(parse_ranking(R"(["R2","R1","R3"])", 3) == std::vector<int>{1, 0, 2});
    CHECK(parse_ranking("Ranking:\n```json\n[\"r3\", \"R1\", \"R2\",]\n```", 3) == std::vector<int>{2, 0, 1});
    CHECK_THROWS_AS(parse_ranking(R"(["R1","R2"])", 3), GrammarError);
    CHECK_THROWS_AS(parse_ranking(R"(["R1","R1","R2"])", 3), GrammarError);
    CHECK_THROWS_AS(parse_ranking(R"(["R1","R2","R4"])", 3), GrammarError);
    CHECK_THROWS_AS(parse_ranking(R"(["R1","R2",3])", 3), GrammarError);
    CHECK_THROWS_AS(parse_ranking("R1 > R2 > R3", 3), GrammarError);
  }

  TEST_CASE("presentation order is a seeded permutation") {
    const auto a = presentation_order(7, "q1", 10);
    CHECK(a == presentation_order(7, "q1", 10));
    auto sorted = a;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> ident(10);
    std::iota(ident.begin(), ident.end(), 0);
    CHECK(sorted == ident);
    int differs = 0;
    for (int s = 0; s < 20; ++s) differs += presentation_order(s, "q1", 10) != a;
    CHECK(differs >= 18);
    CHECK(presentation_order(7, "q2", 10) != a);
  }

  TEST_CASE("rank prompt shows responses in presentation order") {
    const auto rs = responses(3);
    const std::string p = render_rank_prompt(inst("q"), rs, {2, 0, 1}, false);
    const auto r1 = p.find("[R1]\nanswer 2");
    const auto r2 = p.find("[R2]\nanswer 0");
    const auto r3 = p.find("[R3]\nanswer 1");
    REQUIRE(r1 != std::string::npos);
    REQUIRE(r2 != std::string::npos);
    REQUIRE(r3 != std::string::npos);
    CHECK(r1 < r2);
    CHECK(r2 < r3);
    Instance with_ctx = inst("q");
    with_ctx.context = "SECRET CONTEXT";
    CHECK(render_rank_prompt(with_ctx, rs, {0, 1, 2}, false).find("SECRET CONTEXT") == std::string::npos);
    CHECK(render_rank_prompt(with_ctx, rs, {0, 1, 2}, true).find("SECRET CONTEXT") != std::string::npos);
  }

  TEST_CASE("pseudo labels map judge labels back to model ids") {
    const auto rs = responses(10);
    const std::uint64_t seed = 42;
    const auto order = presentation_order(seed, "q1", 10);
    // The judge ranks by original index: m0 best. Find the label of each.
    std::vector<int> label_of(10);
    for (int j = 0; j < 10; ++j) label_of[order[j]] = j;
    std::vector<int> ranked_labels;
    for (int i = 0; i < 10; ++i) ranked_labels.push_back(label_of[i]);

    FixtureTable f;
    f.add("rank", "*", labels_json(ranked_labels));
    MockJudge judge(1, MockBehavior::scripted, f);
    const auto out = build_pseudo_labels(judge, inst("q1"), rs, StarConfig{}, seed);
    REQUIRE(out.size() == 2);
    CHECK(out[0].offset == 1);
    CHECK(out[0].selected_indices == std::vector<int>{0, 4, 8});
    CHECK(out[0].selected_model_ids == std::vector<std::string>{"m0", "m4", "m8"});
    CHECK(out[1].selected_model_ids == std::vector<std::string>{"m1", "m5", "m9"});
    CHECK(judge.calls() == 1);
  }

  TEST_CASE("wrong candidate count fails before any judge call") {
    MockJudge judge(1, MockBehavior::scripted);
    CHECK_THROWS_AS(build_pseudo_labels(judge, inst("q"), responses(9), StarConfig{}, 1), PreconditionError);
    CHECK_THROWS_AS(build_pseudo_labels(judge, inst("q"), responses(10), StarConfig{3, {3}, 10, false}, 1),
                    ConfigError);
    CHECK(judge.calls() == 0);
  }

  TEST_CASE("echo judge ranks deterministically") {
    const auto rs = responses(10);
    MockJudge a(3, MockBehavior::echo_fixture);
    MockJudge b(3, MockBehavior::echo_fixture);
    CHECK(build_pseudo_labels(a, inst("q1"), rs, StarConfig{}, 9) ==
          build_pseudo_labels(b, inst("q1"), rs, StarConfig{}, 9));
  }
}
