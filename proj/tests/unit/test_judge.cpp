#include <doctest.h>

#include "fixtures.hpp"
#include "mock_gateway.hpp"
#include "sabia/error.hpp"
#include "sabia/judge.hpp"
#include "temp_dir.hpp"

using namespace sabia;
using sabia::test::ScriptedBackend;
using sabia::test::verdict_reply;

namespace {

const ModelSpec kJudge = default_judge();

ScriptedBackend replies(std::vector<std::string> texts) {
  return ScriptedBackend([texts](const ModelSpec& spec, const std::vector<ChatMessage>&, int call) {
    return CompletionResult{texts.at(static_cast<std::size_t>(call)), spec.model_id, 0.0};
  });
}

JudgeVerdict run(const ScriptedBackend& b) {
  return judge_evaluate(b, kJudge, "Qual o prazo?", "Trinta dias.", "O prazo é de trinta dias.");
}

}  // namespace

TEST_CASE("scale extremes normalize to 0 and 1") {
  CHECK(run(replies({verdict_reply(5, 5, 5, 5, 5)})).normalized == 1.0);
  CHECK(run(replies({verdict_reply(1, 1, 1, 1, 1)})).normalized == 0.0);
}

TEST_CASE("(5,4,4,3,5) normalizes to exactly 0.8") {
  const auto v = run(replies({verdict_reply(5, 4, 4, 3, 5, "boa")}));
  CHECK(v.normalized == 0.8);
  CHECK(v.criteria() == std::array<int, 5>{5, 4, 4, 3, 5});
  CHECK(v.rationale == "boa");
  CHECK(normalize_criteria({5, 4, 4, 3, 5}) == 0.8);
}

TEST_CASE("normalization depends only on the integer sum") {
  for (int a = 1; a <= 5; ++a)
    for (int b = 1; b <= 5; ++b)
      for (int c = 1; c <= 5; ++c) {
        const double x = normalize_criteria({a, b, c, 3, 2});
        const double y = normalize_criteria({c, 2, a, b, 3});
        CHECK(x == y);
        CHECK(x == static_cast<double>(a + b + c) / 20.0);
        CHECK(x >= 0.0);
        CHECK(x <= 1.0);
      }
}

TEST_CASE("a malformed reply triggers exactly one re-ask") {
  auto b = replies({"Acho que a resposta está boa.", "```json\n" + verdict_reply(4, 4, 4, 4, 4) + "\n```"});
  const auto v = run(b);
  CHECK(v.normalized == 0.75);
  CHECK(b.calls() == 2);
  const auto transcripts = b.transcripts();
  REQUIRE(transcripts.size() == 2);
  REQUIRE(transcripts[1].size() == 3);
  CHECK(transcripts[1][1].role == Role::assistant);
  CHECK(transcripts[1][1].content == "Acho que a resposta está boa.");
  CHECK(transcripts[1][2].content == std::string(kJudgeFormatReminder));
  CHECK(b.last_params().temperature == 0.0);
}

TEST_CASE("two unusable replies raise a format error") {
  auto b = replies({"sem json", "{\"relevancia\": 5}"});
  CHECK_THROWS_AS(run(b), JudgeFormatError);
  CHECK(b.calls() == 2);
}

TEST_CASE("an out-of-range score takes the re-ask path") {
  auto b = replies({verdict_reply(6, 4, 4, 4, 4), verdict_reply(5, 4, 4, 3, 5)});
  CHECK(run(b).normalized == 0.8);
  CHECK(b.calls() == 2);
  auto zero = replies({verdict_reply(0, 4, 4, 4, 4), verdict_reply(1, 4, 4, 4, 9)});
  CHECK_THROWS_AS(run(zero), JudgeFormatError);
}

TEST_CASE("parse_judge_reply tolerates prose and rejects bad values") {
  CHECK(parse_judge_reply("Avaliação: " + verdict_reply(3, 3, 3, 3, 3) + " fim.").normalized == 0.5);
  CHECK(parse_judge_reply(R"({"relevancia":5.0,"acuracia":5,"completude":5,"clareza":5,"concisao":5})").normalized == 1.0);
  CHECK_THROWS_AS(parse_judge_reply(R"({"relevancia":4.5,"acuracia":5,"completude":5,"clareza":5,"concisao":5})"),
                  JudgeFormatError);
  CHECK_THROWS_AS(parse_judge_reply(R"({"relevancia":"5","acuracia":5,"completude":5,"clareza":5,"concisao":5})"),
                  JudgeFormatError);
  CHECK_THROWS_AS(parse_judge_reply("[1,2,3]"), JudgeFormatError);
  CHECK_THROWS_AS(parse_judge_reply("{ quebrado"), JudgeFormatError);
}

TEST_CASE("the judge prompt carries the rubric and all three texts") {
  auto b = replies({verdict_reply(5, 5, 5, 5, 5)});
  run(b);
  const auto prompt = b.transcripts().front().front().content;
  CHECK(prompt.find("Qual o prazo?") != std::string::npos);
  CHECK(prompt.find("Trinta dias.") != std::string::npos);
  CHECK(prompt.find("O prazo é de trinta dias.") != std::string::npos);
  for (const char* c : {"relevancia", "acuracia", "completude", "clareza", "concisao"}) {
    CHECK(prompt.find(c) != std::string::npos);
  }
}

TEST_CASE("judge templates substitute in one pass") {
  const auto t = JudgeTemplate::from_text("{candidate}|{question}|{reference}");
  CHECK(t.render("{reference}", "{candidate}", "{question}") == "{question}|{reference}|{candidate}");
  CHECK_THROWS_AS(JudgeTemplate::from_text("{question} {reference}"), TemplateError);
  CHECK_THROWS_AS(JudgeTemplate::from_text("{question} {reference} {candidate} {candidate}"), TemplateError);
  CHECK_THROWS_AS(JudgeTemplate::load("/nonexistent/judge.txt"), TemplateError);
  test::TempDir dir;
  dir.write("j.txt", "Q={question} R={reference} C={candidate}");
  CHECK(JudgeTemplate::load(dir / "j.txt").render("a", "b", "c") == "Q=a R=b C=c");
}

TEST_CASE("blank inputs are rejected before calling the judge") {
  auto b = replies({verdict_reply(5, 5, 5, 5, 5)});
  CHECK_THROWS_AS(judge_evaluate(b, kJudge, "q", "", "c"), ConfigError);
  CHECK(b.calls() == 0);
}
