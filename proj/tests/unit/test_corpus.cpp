#include <string>

#include "doctest.h"
#include "json.hpp"
#include "memrouter/corpus.hpp"
#include "memrouter/error.hpp"
#include "memrouter/synthetic.hpp"
#include "util.hpp"

using namespace memrouter;
using json = nlohmann::ordered_json;

namespace {

const char* kTwoSessions =
    R"({"conversation_id":"c1","sessions":[)"
    R"({"session_id":"s1","datetime":"2023-05-08 13:56","turns":[)"
    R"({"turn_id":"t1","speaker":"Caroline","text":"I went to a support group yesterday."},)"
    R"({"turn_id":"t2","speaker":"Melanie","text":"That sounds great!"},)"
    R"({"turn_id":"t3","speaker":"Caroline","text":"It was really powerful."}]},)"
    R"({"session_id":"s2","datetime":"2023-05-25 13:14","turns":[)"
    R"({"turn_id":"t4","speaker":"Melanie","text":"I painted a sunrise last week."},)"
    R"({"turn_id":"t5","speaker":"Caroline","text":"Lovely, send me a photo."}]}],)"
    R"("qa":[{"question":"When did Caroline go to the support group?","answer":"7 May 2023","category":"temporal"},)"
    R"({"question":"What did Caroline paint?","answer":"none","category":"adversarial"}]})";

}  // namespace

TEST_CASE("two-session file loads with contiguous turn indices") {
  auto corpus = parse_corpus(kTwoSessions);
  REQUIRE(corpus.size() == 1);
  const auto& c = corpus[0];
  CHECK(c.sessions.size() == 2);
  auto turns = c.turns();
  REQUIRE(turns.size() == 5);
  for (std::size_t i = 0; i < turns.size(); ++i) CHECK(turns[i].turn->turn_index == i);
  CHECK(turns[3].turn->session_ref == "s2");
  CHECK(turns[3].session->datetime == DateTime{2023, 5, 25, 13, 14});
  CHECK(c.speakers() == std::vector<std::string>{"Caroline", "Melanie"});
  REQUIRE(c.qa.size() == 2);
  CHECK(c.qa[0].category == Category::Temporal);
  CHECK(c.qa[0].scorable());
  CHECK_FALSE(c.qa[1].scorable());
}

TEST_CASE("duplicate turn_id is rejected by name") {
  std::string doc = kTwoSessions;
  doc.replace(doc.find("\"t4\""), 4, "\"t2\"");
  try {
    parse_corpus(doc);
    FAIL("expected InvariantError");
  } catch (const InvariantError& e) {
    CHECK(std::string(e.what()).find("duplicate turn_id 't2'") != std::string::npos);
  }
}

TEST_CASE("parse errors carry line and field location") {
  std::string doc = kTwoSessions;
  doc.replace(doc.find("That sounds great!"), 18, "");
  try {
    parse_corpus(std::string("\n") + doc, "conv.jsonl");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.where() == "conv.jsonl:line 2.sessions[0].turns[1].text");
  }
  CHECK_THROWS_AS(parse_corpus(R"({"conversation_id":"c","sessions":[{"session_id":"s","datetime":"May 8","turns":[]}]})"),
                  ParseError);
  CHECK_THROWS_AS(parse_corpus(R"({"conversation_id":"c","sessions":[],"qa":[{"question":"q","answer":"a","category":"trivia"}]})"),
                  ParseError);
}

TEST_CASE("session datetimes must not decrease") {
  std::string doc = kTwoSessions;
  doc.replace(doc.find("2023-05-25"), 10, "2023-05-01");
  CHECK_THROWS_AS(parse_corpus(doc), InvariantError);
}

TEST_CASE("benchmark-sized conversations load with exact turn counts") {
  auto data = benchmark_shaped_corpus(10, 35, 588, 3);
  auto dir = testutil::scratch_dir("corpus");
  write_corpus((dir / "long.jsonl").string(), data.corpus);
  auto loaded = load_corpus((dir / "long.jsonl").string());
  REQUIRE(loaded.size() == 10);
  for (const auto& c : loaded) {
    CHECK(c.sessions.size() == 35);
    CHECK(c.turn_count() == 588);
    CHECK(c.turns().back().turn->turn_index == 587);
  }
}

TEST_CASE("serialize(load(x)) reproduces the document") {
  auto corpus = parse_corpus(kTwoSessions);
  CHECK(json::parse(serialize_conversation(corpus[0])) == json::parse(kTwoSessions));

  auto data = planted_fact_corpus({});
  auto text = serialize_corpus(data.corpus);
  CHECK(serialize_corpus(parse_corpus(text)) == text);

  auto json_array = "[" + serialize_conversation(data.corpus[0]) + "]";
  CHECK(serialize_conversation(parse_corpus(json_array)[0]) == serialize_conversation(data.corpus[0]));
}

TEST_CASE("label records") {
  auto corpus = parse_corpus(kTwoSessions);
  auto ok = parse_labels(
      "{\"turn_id\":\"t1\",\"op\":\"NOOP\"}\n{\"turn_id\":\"t2\",\"op\":\"ADD\",\"content_type\":\"plan\"}\n",
      corpus);
  CHECK(ok.size() == 2);
  const auto* t2 = ok.find("c1", "t2");
  REQUIRE(t2);
  CHECK(t2->op == Op::Add);
  CHECK(t2->content_type == ContentType::Plan);
  CHECK(ok.find("c1", "t1")->content_type == std::nullopt);

  CHECK_THROWS_WITH_AS(parse_labels("{\"turn_id\":\"t1\",\"op\":\"NOOP\",\"content_type\":\"plan\"}", corpus),
                       doctest::Contains("NOOP but has content_type"), InvariantError);
  CHECK_THROWS_WITH_AS(parse_labels("{\"turn_id\":\"t1\",\"op\":\"ADD\"}", corpus),
                       doctest::Contains("ADD without content_type"), InvariantError);
  CHECK_THROWS_WITH_AS(parse_labels("{\"turn_id\":\"t9\",\"op\":\"NOOP\"}", corpus),
                       doctest::Contains("unknown turn_id 't9'"), InvariantError);
  CHECK_THROWS_AS(parse_labels("{\"turn_id\":\"t1\",\"op\":\"KEEP\"}", corpus), ParseError);

  auto reparsed = parse_labels(serialize_labels(ok), corpus);
  CHECK(serialize_labels(reparsed) == serialize_labels(ok));
}

TEST_CASE("labels disambiguate shared turn ids by conversation") {
  std::string second = kTwoSessions;
  second.replace(second.find("\"c1\""), 4, "\"c2\"");
  auto corpus = parse_corpus(std::string(kTwoSessions) + "\n" + second);
  CHECK_THROWS_WITH_AS(parse_labels("{\"turn_id\":\"t1\",\"op\":\"NOOP\"}", corpus),
                       doctest::Contains("ambiguous"), InvariantError);
  auto labels = parse_labels("{\"conversation_id\":\"c2\",\"turn_id\":\"t1\",\"op\":\"NOOP\"}", corpus);
  CHECK(labels.find("c2", "t1") != nullptr);
  CHECK(labels.find("c1", "t1") == nullptr);
}

TEST_CASE("1:1:8 split of ten conversations") {
  auto data = planted_fact_corpus({.conversations = 10});
  auto spec = SplitSpec::by_ratio(data.corpus, 1, 1, 8);
  auto split = apply_split(data.corpus, spec);
  CHECK(split.train.size() == 1);
  CHECK(split.validation.size() == 1);
  CHECK(split.test.size() == 8);
  CHECK(split.warnings.empty());
  CHECK(split.is_test("conv-009"));
  CHECK_FALSE(split.is_test("conv-000"));
}

TEST_CASE("split errors and the empty-test warning") {
  auto data = planted_fact_corpus({.conversations = 3});
  SplitSpec overlap{{"conv-000"}, {"conv-000", "conv-001"}, {"conv-002"}};
  CHECK_THROWS_WITH_AS(apply_split(data.corpus, overlap), doctest::Contains("appears in both"),
                       InvariantError);
  SplitSpec unknown{{"conv-000"}, {"conv-001"}, {"conv-002", "conv-777"}};
  CHECK_THROWS_WITH_AS(apply_split(data.corpus, unknown), doctest::Contains("conv-777"),
                       InvariantError);
  SplitSpec missing{{"conv-000"}, {"conv-001"}, {}};
  CHECK_THROWS_AS(apply_split(data.corpus, missing), InvariantError);
  SplitSpec no_test{{"conv-000", "conv-001"}, {"conv-002"}, {}};
  auto split = apply_split(data.corpus, no_test);
  CHECK(split.test.empty());
  REQUIRE(split.warnings.size() == 1);
  CHECK(split.warnings[0].find("test split is empty") != std::string::npos);
}
