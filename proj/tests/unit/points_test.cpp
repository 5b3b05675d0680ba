#include <doctest.h>

#include <fstream>

#include "temp_dir.hpp"
#include "wimpe/metrics.hpp"
#include "wimpe/points.hpp"

using namespace wimpe;

TEST_SUITE("points") {
  TEST_CASE("templates: placeholders, escapes and stray braces") {
    const PromptTemplate t{"t", "Q: {question}\nJSON {{\"a\": 1}} and {not a placeholder and }"};
    CHECK(t.placeholders() == std::set<std::string>{"question"});
    CHECK(t.render({{"question", "why {x}?"}}) ==
          "Q: why {x}?\nJSON {\"a\": 1} and {not a placeholder and }");
  }

  TEST_CASE("templates: unbound and missing placeholders are named") {
    const PromptTemplate t{"t", "{question} {answer}"};
    CHECK_THROWS_WITH_AS(t.render({{"question", "q"}}), doctest::Contains("{answer}"), TemplateError);
    CHECK_THROWS_WITH_AS(t.render({{"question", "q"}, {"answer", "a"}}, {"reference_answer"}),
                         doctest::Contains("{reference_answer}"), TemplateError);
  }

  TEST_CASE("templates: every shipped template loads and overrides apply") {
    const auto names = default_template_names();
    for (const char* n : {"points", "wpa", "pcp", "coarse3", "rank", "prompt_optim", "error_type"}) {
      CHECK(std::find(names.begin(), names.end(), n) != names.end());
    }
    CHECK_THROWS_AS(default_template("nope"), TemplateError);

    testing_support::TempDir dir("tpl");
    { std::ofstream(dir / "points.txt") << "custom {question} {reference_answer}"; }
    const TemplateSet set(dir.path());
    CHECK(set.get("points").body == "custom {question} {reference_answer}");
    CHECK(set.get("wpa").body == default_template("wpa").body);
    CHECK(render_points_prompt("q", "r", set.get("points")) == "custom q r");
  }

  TEST_CASE("points prompt requires question and reference") {
    CHECK_THROWS_AS(render_points_prompt("", "r"), PreconditionError);
    CHECK_THROWS_AS(render_points_prompt("q", ""), PreconditionError);
    const std::string p = render_points_prompt("Why?", "Because it is.");
    CHECK(p.find("Why?") != std::string::npos);
    CHECK(p.find("Because it is.") != std::string::npos);
    CHECK(p.find("[[Text of first scoring point]] | ((3))") != std::string::npos);
  }

  TEST_CASE("parse_points accepts the documented example output") {
    const auto pts = parse_points(
        "- [[Text of first scoring point]] | ((3))\n"
        "- [[Text of second scoring point]] | ((2))\n"
        "- [[Text of third scoring point]] | ((1))\n");
    REQUIRE(pts.size() == 3);
    CHECK(pts[0].index == 1);
    CHECK(pts[0].text == "Text of first scoring point");
    CHECK(pts[0].weight == 3);
    CHECK(pts[2].index == 3);
    CHECK(pts[2].weight == 1);
  }

  TEST_CASE("parse_points skips chatter and fences but not broken delimiters") {
    const auto pts = parse_points("Here are the points:\n```\n* [[A]] | ((2))\n\n[[B]]|((1))\n```\n");
    REQUIRE(pts.size() == 2);
    CHECK(pts[1].text == "B");
    CHECK_THROWS_AS(parse_points("- [[A] | ((2))"), GrammarError);
    CHECK_THROWS_AS(parse_points("- [[A]] ((2))"), GrammarError);
    CHECK_THROWS_AS(parse_points("- [[]] | ((2))"), GrammarError);
    CHECK_THROWS_AS(parse_points("- [[A]] | ((x))"), GrammarError);
    CHECK_THROWS_AS(parse_points("no points here"), GrammarError);
  }

  TEST_CASE("weights outside 1..3 are rejected with the grammar's own wording") {
    CHECK_THROWS_WITH_AS(parse_points("- [[A]] | ((4))"), doctest::Contains("1, 2 or 3"), GrammarError);
    CHECK_THROWS_AS(parse_points("- [[A]] | ((0))"), GrammarError);
  }

  TEST_CASE("point count cap") {
    std::string many;
    for (int i = 0; i < 51; ++i) many += "- [[p" + std::to_string(i) + "]] | ((1))\n";
    CHECK_THROWS_AS(parse_points(many), GrammarError);
    CHECK(parse_points(many, {60}).size() == 51);
  }

  TEST_CASE("format then parse is the identity") {
    const std::vector<ScoringPoint> pts = {{1, "Paris is the capital", 3}, {2, "It lies on the Seine", 1}};
    CHECK(parse_points(format_points(pts)) == pts);
  }

  TEST_CASE("generate_points uses the judge and retries malformed output") {
    FixtureTable f;
    f.add("points", "*", std::vector<std::string>{"- [[A]] | ((9))", "- [[A]] | ((3))\n- [[B]] | ((1))"});
    MockJudge judge(1, MockBehavior::scripted, f);
    const auto pts = generate_points(judge, "q", "A. B.", 2);
    CHECK(pts.size() == 2);
    CHECK(judge.calls_for("points") == 2);

    MockJudge always_bad(1, MockBehavior::scripted, [] {
      FixtureTable t;
      t.add("points", "*", "nothing useful");
      return t;
    }());
    CHECK_THROWS_AS(generate_points(always_bad, "q", "r", 1), JudgeOutputError);
    CHECK(always_bad.calls() == 2);
  }

  TEST_CASE("prompt optimization returns a renamed template") {
    const PromptTemplate base{"points", "Extract points.\n{question}\n{reference_answer}"};
    FixtureTable f;
    f.add("prompt_optim", "*", "```\nExtract atomic points.\n{question}\n{reference_answer}\n```");
    MockJudge judge(1, MockBehavior::scripted, f);
    const auto out = optimize_prompt(judge, base, "q", "r", {{1, "A", 2}}, {{{1, "A!", 3}, "weight too low"}});
    CHECK(out.name == "points-optim");
    CHECK(out.body == "Extract atomic points.\n{question}\n{reference_answer}");
    const std::string meta =
        render_optimization_prompt(base, "q", "r", {{1, "A", 2}}, {{{1, "A!", 3}, "weight too low"}});
    CHECK(meta.find("Extract points.") != std::string::npos);
    CHECK(meta.find("weight too low") != std::string::npos);

    FixtureTable empty;
    empty.add("prompt_optim", "*", "   ");
    MockJudge blank(1, MockBehavior::scripted, empty);
    CHECK_THROWS_AS(optimize_prompt(blank, base, "q", "r", {{1, "A", 2}}, {{{1, "A!", 3}, ""}}), JudgeOutputError);
    CHECK_THROWS_AS(render_optimization_prompt(base, "q", "r", {}, {{{1, "A!", 3}, ""}}), PreconditionError);
    CHECK_THROWS_AS(render_optimization_prompt(base, "q", "r", {{1, "A", 2}}, {}), PreconditionError);
  }
}
