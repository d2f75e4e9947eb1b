#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "udssm/evaluator.hpp"

using namespace udssm;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& body) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << body;
  return path;
}

Question councilmen_question() {
  Question q;
  q.id = "wsc-1";
  q.tokens = tokenize(
      "The city councilmen refused the demonstrators a permit because they "
      "feared violence.");
  q.pronoun_index = 10;
  q.candidates = {{2, 3, 'A'}, {5, 6, 'B'}};
  q.gold = 1;
  return q;
}

// Stub that always ranks candidate 1 highest.
Scorer first_wins() {
  return [](const Question& q) {
    std::vector<double> s(q.candidates.size(), 0.0);
    s[0] = 1.0;
    return s;
  };
}

// Stub that puts the peak on the gold candidate.
Scorer oracle() {
  return [](const Question& q) {
    std::vector<double> s(q.candidates.size(), 0.0);
    s[q.gold - 1] = 1.0;
    return s;
  };
}

}  // namespace

TEST_CASE("parse_questions reads the hand-serialized WSC example") {
  auto path = temp_file(
      "questions_ok.jsonl",
      R"({"id":"wsc-1","tokens":["The","city","councilmen","refused","the","demonstrators","a","permit","because","they","feared","violence","."],"pronoun":10,"candidates":[[2,3],[5,6]],"gold":1})"
      "\n");
  auto qs = parse_questions(path.string());
  REQUIRE(qs.size() == 1);
  CHECK(qs[0].candidates.size() == 2);
  CHECK(qs[0].gold == 1);
  CHECK(qs[0].candidates[0].label == 'A');
  CHECK(qs[0].candidates[1].label == 'B');
  CHECK(qs[0].tokens[9] == "they");
}

TEST_CASE("parse_questions rejects spans overlapping the pronoun") {
  auto path = temp_file(
      "questions_overlap.jsonl",
      R"({"id":"bad-1","tokens":["a","b","c","it","d"],"pronoun":4,"candidates":[[3,4]],"gold":1})"
      "\n");
  CHECK_THROWS_WITH(parse_questions(path.string()),
                    Catch::Matchers::ContainsSubstring("bad-1"));
}

TEST_CASE("parse_questions on an empty file") {
  auto path = temp_file("questions_empty.jsonl", "");
  CHECK(parse_questions(path.string()).empty());
}

TEST_CASE("question files round-trip") {
  std::vector<Question> qs = {councilmen_question()};
  auto path = std::filesystem::temp_directory_path() / "questions_rt.jsonl";
  write_questions(path.string(), qs);
  auto loaded = parse_questions(path.string());
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].tokens == qs[0].tokens);
  CHECK(loaded[0].pronoun_index == qs[0].pronoun_index);
  CHECK(loaded[0].gold == qs[0].gold);
  CHECK(loaded[0].candidates[1].start == qs[0].candidates[1].start);
}

TEST_CASE("convert_collection_xml parses a WSC-style collection") {
  auto path = temp_file("collection.xml", R"(<?xml version="1.0"?>
<collection>
  <schema>
    <text>
      <txt1>The city councilmen refused the demonstrators a permit because</txt1>
      <pron>they</pron>
      <txt2>feared violence.</txt2>
    </text>
    <answers>
      <answer>The city councilmen</answer>
      <answer>The demonstrators</answer>
    </answers>
    <correctAnswer>A.</correctAnswer>
  </schema>
  <schema>
    <text>
      <txt1>The trophy doesn't fit into the brown suitcase because</txt1>
      <pron>it</pron>
      <txt2>is too small.</txt2>
    </text>
    <answers>
      <answer>the trophy</answer>
      <answer>the suitcase</answer>
    </answers>
    <correctAnswer>B</correctAnswer>
  </schema>
  <schema>
    <text>
      <txt1>Nothing here matches the answers at</txt1>
      <pron>it</pron>
      <txt2>all.</txt2>
    </text>
    <answers>
      <answer>zebra</answer>
      <answer>quagga</answer>
    </answers>
    <correctAnswer>A</correctAnswer>
  </schema>
</collection>
)");
  ConversionResult res = convert_collection_xml(path.string(), CollectionKind::Wsc);
  REQUIRE(res.questions.size() == 2);
  REQUIRE(res.log.size() == 1);
  CHECK_THAT(res.log[0], Catch::Matchers::ContainsSubstring("zebra"));

  const Question& q1 = res.questions[0];
  CHECK(q1.id == "wsc-1");
  CHECK(q1.pronoun_index == 10);
  CHECK(q1.tokens[9] == "they");
  REQUIRE(q1.candidates.size() == 2);
  CHECK(q1.candidates[0].start == 1);
  CHECK(q1.candidates[0].end == 3);
  CHECK(q1.candidates[1].start == 5);
  CHECK(q1.candidates[1].end == 6);
  CHECK(q1.gold == 1);

  // "the trophy" matches case-insensitively; gold letter B -> 2
  const Question& q2 = res.questions[1];
  CHECK(q2.gold == 2);
  CHECK(q2.tokens[q2.pronoun_index - 1] == "it");
}

TEST_CASE("convert_collection_xml handles PDP-style problem elements") {
  auto path = temp_file("pdp.xml", R"(<?xml version="1.0"?>
<PDPChallenge>
  <problem>
    <text>
      <txt1>Always before, Larry had helped Dad with his work. But he could
        not help</txt1>
      <pron>him</pron>
      <txt2>now, for Dad said so.</txt2>
    </text>
    <answers>
      <answer>Larry</answer>
      <answer>Dad</answer>
    </answers>
    <correctAnswer>B</correctAnswer>
  </problem>
</PDPChallenge>
)");
  ConversionResult res = convert_collection_xml(path.string(), CollectionKind::Pdp);
  REQUIRE(res.questions.size() == 1);
  CHECK(res.questions[0].id == "pdp-1");
  // "Dad" also occurs after the pronoun; the before-pronoun mention wins
  const auto& dad = res.questions[0].candidates[1];
  CHECK(res.questions[0].tokens[dad.start - 1] == "Dad");
  CHECK(dad.start == 7);
  CHECK(dad.end < res.questions[0].pronoun_index);
  CHECK(res.questions[0].gold == 2);
}

TEST_CASE("candidate location prefers the last mention before the pronoun") {
  auto path = temp_file("repeat.xml", R"(<collection>
  <schema>
    <text>
      <txt1>Anna met the teacher and later Anna asked whether</txt1>
      <pron>she</pron>
      <txt2>could leave early.</txt2>
    </text>
    <answers>
      <answer>Anna</answer>
      <answer>the teacher</answer>
    </answers>
    <correctAnswer>A</correctAnswer>
  </schema>
</collection>
)");
  ConversionResult res = convert_collection_xml(path.string(), CollectionKind::Wsc);
  REQUIRE(res.questions.size() == 1);
  // Anna occurs at 1 and 7; the later mention is taken
  CHECK(res.questions[0].candidates[0].start == 7);
}

TEST_CASE("evaluate_scorer with stubs") {
  std::vector<Question> qs;
  for (int k = 0; k < 10; ++k) {
    Question q = councilmen_question();
    q.id = "q" + std::to_string(k);
    q.gold = k < 4 ? 1 : 2;  // 40% gold-is-first
    qs.push_back(q);
  }
  EvalReport first = evaluate_scorer(first_wins(), qs);
  CHECK(first.total == 10);
  CHECK(first.answered == 10);
  CHECK(first.unsupported == 0);
  CHECK(first.correct == 4);
  CHECK_THAT(first.accuracy, Catch::Matchers::WithinAbs(0.4, 1e-15));

  EvalReport perfect = evaluate_scorer(oracle(), qs);
  CHECK(perfect.accuracy == 1.0);
}

TEST_CASE("accuracy formats like the paper's table") {
  CHECK(format_accuracy(45.0 / 60.0) == "75.0%");
  CHECK(format_accuracy(0.592) == "59.2%");
  CHECK(format_accuracy(1.0) == "100.0%");
}

TEST_CASE("unsupported questions count as incorrect") {
  Scorer flaky = [](const Question& q) -> std::vector<double> {
    if (q.id == "q1") throw UnsupportedQuestion("question q1: unsupported");
    std::vector<double> s(q.candidates.size(), 0.0);
    s[q.gold - 1] = 1.0;
    return s;
  };
  std::vector<Question> qs;
  for (int k = 0; k < 4; ++k) {
    Question q = councilmen_question();
    q.id = "q" + std::to_string(k);
    qs.push_back(q);
  }
  EvalReport rep = evaluate_scorer(flaky, qs);
  CHECK(rep.total == 4);
  CHECK(rep.answered == 3);
  CHECK(rep.unsupported == 1);
  CHECK(rep.correct == 3);
  CHECK_THAT(rep.accuracy, Catch::Matchers::WithinAbs(0.75, 1e-15));
  CHECK(rep.answered + rep.unsupported == rep.total);
  CHECK(rep.records[1].unsupported);
  CHECK(rep.records[1].pick == 0);
}

TEST_CASE("ensemble of one equals the single model decision-for-decision") {
  Rng rng(3);
  EmbeddingTable table = EmbeddingTable::create(
      {"the", "city", "councilmen", "refused", "demonstrators", "a", "permit",
       "because", "they", "feared", "violence"},
      6, rng);
  Udssm1Params model = Udssm1Params::init(std::move(table), 4, rng);
  std::vector<Question> qs;
  for (int k = 0; k < 6; ++k) {
    Question q = councilmen_question();
    q.id = "q" + std::to_string(k);
    q.gold = 1 + k % 2;
    qs.push_back(q);
  }

  EvalReport single = evaluate_model(model, qs);
  EvalReport ens = evaluate_ensemble({make_scorer(model)}, qs);
  CHECK(ens.member_count == 1);
  REQUIRE(ens.records.size() == single.records.size());
  for (std::size_t k = 0; k < ens.records.size(); ++k) {
    CHECK(ens.records[k].pick == single.records[k].pick);
    CHECK(ens.records[k].correct == single.records[k].correct);
  }
  CHECK(ens.accuracy == single.accuracy);
  REQUIRE(ens.member_accuracies.size() == 1);
  CHECK(ens.member_accuracies[0] == single.accuracy);
}

TEST_CASE("ensemble averaging and the symmetric tie") {
  Question q = councilmen_question();
  Scorer likes_a = [](const Question&) {
    return std::vector<double>{5.0, 0.0};
  };
  Scorer likes_b = [](const Question&) {
    return std::vector<double>{0.0, 5.0};
  };
  // opposite certain preferences cancel to a tie -> earlier candidate
  EvalReport rep = evaluate_ensemble({likes_a, likes_b}, {q});
  CHECK(rep.records[0].pick == 1);

  // an extra vote for B breaks the tie
  EvalReport rep2 = evaluate_ensemble({likes_a, likes_b, likes_b}, {q});
  CHECK(rep2.records[0].pick == 2);
  CHECK(rep2.member_count == 3);
}

TEST_CASE("evaluation leaves parameters bitwise unchanged") {
  Rng rng(9);
  EmbeddingTable table = EmbeddingTable::create({"alpha", "beta", "it"}, 4, rng);
  Udssm2Params model = Udssm2Params::init(std::move(table), 3, rng);
  Question q;
  q.id = "ro";
  q.tokens = {"alpha", "beta", "alpha", "saw", "beta", "it", "move"};
  q.pronoun_index = 6;
  q.candidates = {{2, 3, 'A'}, {5, 5, 'B'}};
  q.gold = 2;

  std::vector<double> emb_before = model.emb.matrix.values();
  std::vector<double> wp_before = model.w_p.values();
  evaluate_model(model, {q});
  CHECK(model.emb.matrix.values() == emb_before);
  CHECK(model.w_p.values() == wp_before);
}

TEST_CASE("report JSON carries the bookkeeping fields") {
  Question q = councilmen_question();
  EvalReport rep = evaluate_scorer(oracle(), {q});
  nlohmann::json j = report_to_json(rep);
  CHECK(j["total"] == 1);
  CHECK(j["answered"] == 1);
  CHECK(j["correct"] == 1);
  CHECK(j["questions"].size() == 1);
  CHECK(j["questions"][0]["pick"] == 1);
}
