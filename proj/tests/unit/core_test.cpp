#include <doctest.h>

#include <fstream>

#include "temp_dir.hpp"
#include "wimpe/core.hpp"
#include "wimpe/json_io.hpp"
#include "wimpe/text.hpp"

using namespace wimpe;

TEST_SUITE("core") {
  TEST_CASE("record round trip keeps every field") {
    Record r;
    r.instance = {"i1", "ds", "news", TaskType::summarization, "ctx", "What?", "Because."};
    r.responses = {{"m1", "first"}, {"m2", "second \xE2\x82\xAC"}};
    const std::string line = serialize_record(r);
    CHECK(parse_record(line, 1) == r);
  }

  TEST_CASE("only id, question and reference answer are required") {
    const Record r = parse_record(R"({"id":"a","question":"q","reference_answer":"r"})", 3);
    CHECK(r.instance.task_type == TaskType::question_answering);
    CHECK(r.responses.empty());
  }

  TEST_CASE("dataset errors carry the line number") {
    auto line_of = [](const std::string& s) {
      try {
        parse_record(s, 7);
      } catch (const DatasetError& e) {
        return e.line();
      }
      return std::size_t{0};
    };
    CHECK(line_of("{not json") == 7);
    CHECK(line_of(R"({"id":"a","question":"q","reference_answer":""})") == 7);
    CHECK(line_of(R"({"id":"a","question":"q","reference_answer":"r","responses":[{"model_id":"x","text":"1"},{"model_id":"x","text":"2"}]})") == 7);
    CHECK(line_of(R"({"id":"a","question":"q","reference_answer":"r","task_type":"poetry"})") == 7);
  }

  TEST_CASE("empty reference answer is rejected with a named reason") {
    Instance inst{"i", "", "", TaskType::question_answering, "", "q", ""};
    CHECK_THROWS_WITH_AS(validate_instance(inst, {}), doctest::Contains("reference_answer"), ValidationError);
  }

  TEST_CASE("load_dataset skips blank lines and rejects duplicate ids") {
    testing_support::TempDir dir("core");
    {
      std::ofstream out(dir / "d.jsonl");
      out << R"({"id":"a","question":"q","reference_answer":"r"})" << "\n\n"
          << R"({"id":"b","question":"q","reference_answer":"r"})" << "\n";
    }
    CHECK(load_dataset(dir / "d.jsonl").size() == 2);
    {
      std::ofstream out(dir / "dup.jsonl");
      out << R"({"id":"a","question":"q","reference_answer":"r"})" << "\n"
          << R"({"id":"a","question":"q","reference_answer":"r"})" << "\n";
    }
    CHECK_THROWS_AS(load_dataset(dir / "dup.jsonl"), DatasetError);
  }

  TEST_CASE("save then load is the identity") {
    testing_support::TempDir dir("core");
    std::vector<Record> rs(2);
    rs[0].instance = {"x", "d", "", TaskType::multi_turn_conversation, "", "q1", "r1"};
    rs[1].instance = {"y", "d", "", TaskType::question_answering, "", "q2", "r2"};
    rs[1].responses = {{"m", "t"}};
    save_dataset(dir / "o.jsonl", rs);
    CHECK(load_dataset(dir / "o.jsonl") == rs);
  }

  TEST_CASE("character length counts code points") {
    CHECK(GeneratedResponse{"m", "abc"}.char_length() == 3);
    CHECK(GeneratedResponse{"m", "caf\xC3\xA9"}.char_length() == 4);
    CHECK(GeneratedResponse{"m", "\xF0\x9F\x98\x80"}.char_length() == 1);
    CHECK(utf8_length("") == 0);
  }

  TEST_CASE("value domains") {
    CHECK(is_alignment_value(0.0));
    CHECK(is_alignment_value(0.5));
    CHECK(is_alignment_value(1.0));
    CHECK_FALSE(is_alignment_value(0.25));
    CHECK(is_penalty_value(1.0));
    CHECK_FALSE(is_penalty_value(0.5));
    CHECK(is_point_weight(3));
    CHECK_FALSE(is_point_weight(0));
    CHECK_FALSE(is_point_weight(4));
  }

  TEST_CASE("error type names round trip") {
    for (ErrorType t : kAllErrorTypes) CHECK(error_type_from_string(to_string(t)) == t);
    CHECK_THROWS_AS(error_type_from_string("confused"), ValidationError);
  }

  TEST_CASE("bounded scores are validated") {
    InstanceEvaluation ev{"i", "m", {{"WPA", 1.5}}, {}, {}, {}};
    CHECK_THROWS_AS(validate_evaluation(ev), ValidationError);
    ev.scores = {{"BLEU", 0.3}, {"coarse5", 4.0}};
    CHECK_NOTHROW(validate_evaluation(ev));
  }

  TEST_CASE("evaluation JSON round trip") {
    InstanceEvaluation ev;
    ev.instance_id = "i";
    ev.model_id = "m";
    ev.scores = {{"WPA", 0.5}, {"PCP", 0.0}};
    ev.point_assessments = std::vector<PointAssessment>{{1, 0.5, "partially", ErrorType::vague_or_indirect_answer},
                                                        {2, 1.0, "ok", std::nullopt}};
    ev.penalty_assessments = std::vector<PenaltyAssessment>{{1, 0.0, "fine"}};
    ev.failures = {{"Coarse3", "bad json"}};
    nlohmann::json j = ev;
    const auto back = j.get<InstanceEvaluation>();
    CHECK(back.scores == ev.scores);
    CHECK(back.point_assessments == ev.point_assessments);
    CHECK(back.penalty_assessments == ev.penalty_assessments);
    CHECK(back.failures == ev.failures);
    CHECK(dump_canonical(j) == dump_canonical(nlohmann::json(back)));
  }
}

TEST_SUITE("text") {
  TEST_CASE("number parsing is strict") {
    CHECK(text::parse_number("0.5") == 0.5);
    CHECK(text::parse_number(" 1 ") == 1.0);
    CHECK(text::parse_number("+1") == 1.0);
    CHECK_FALSE(text::parse_number("1x"));
    CHECK_FALSE(text::parse_number(""));
    CHECK_FALSE(text::parse_number("nan"));
    CHECK_FALSE(text::parse_number("inf"));
  }

  TEST_CASE("shortest number formatting round trips") {
    for (double v : {0.0, 0.5, 1.0, 0.1, 1.0 / 3.0, 6.0 / 7.0, 1e-9, 123456.789}) {
      CHECK(text::parse_number(text::format_number(v)) == v);
    }
    CHECK(text::format_number(0.5) == "0.5");
    CHECK(text::format_number(1.0) == "1");
  }

  TEST_CASE("code fences are stripped") {
    CHECK(text::strip_code_fences("```json\n{\"a\":1}\n```") == "{\"a\":1}");
    CHECK(text::strip_code_fences("plain") == "plain");
  }

  TEST_CASE("prompt sections use the last matching header") {
    const std::string p = "### Question\nignored\n### Question\nwhat\n### Reference Answer\nref\n";
    CHECK(text::prompt_section(p, "### Question") == std::optional<std::string>("what"));
    CHECK(text::prompt_section(p, "### Reference Answer") == std::optional<std::string>("ref"));
    CHECK_FALSE(text::prompt_section(p, "### Missing"));
  }

  TEST_CASE("fnv1a64 matches the published test vectors") {
    CHECK(text::fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(text::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(text::fnv1a64("foobar") == 0x85944171f73967e8ULL);
  }

  TEST_CASE("case-insensitive helpers") {
    CHECK(text::contains_ci("The Answer OMITS it", "omits"));
    CHECK(text::starts_with_ci("### question", "### Question"));
    CHECK(text::to_lower_ascii("AbC\xC3\x89") == "abc\xC3\x89");
  }
}
