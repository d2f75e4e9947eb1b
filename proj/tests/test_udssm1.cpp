#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "udssm/udssm1.hpp"

using namespace udssm;

namespace {

Udssm1Params tiny_model(std::size_t d, std::size_t h, std::uint64_t seed,
                        bool zero_lstms = false) {
  Rng rng(seed);
  EmbeddingTable table = EmbeddingTable::create(
      {"alpha", "beta", "gamma", "delta", "river", "stone", "他们"}, d, rng);
  Udssm1Params p = Udssm1Params::init(std::move(table), h, rng);
  if (zero_lstms) {
    p.enc_x_fwd = LstmParams::zeros(d, h);
    p.enc_x_bwd = LstmParams::zeros(d, h);
    p.enc_y_fwd = LstmParams::zeros(d, h);
    p.enc_y_bwd = LstmParams::zeros(d, h);
  }
  return p;
}

PairExampleI make_pair(std::vector<std::string> x, std::vector<std::size_t> nouns,
                       std::vector<std::string> y, std::string id = "t") {
  PairExampleI ex;
  ex.x_tokens = std::move(x);
  ex.noun_positions = std::move(nouns);
  ex.y_tokens = std::move(y);
  ex.source_id = std::move(id);
  return ex;
}

PairExampleI sample_pair(Rng& rng, std::size_t x_len, std::size_t n_nouns) {
  std::vector<std::string> vocab = {"alpha", "beta", "gamma", "delta", "river",
                                    "stone"};
  std::vector<std::string> x, y;
  for (std::size_t k = 0; k < x_len; ++k) x.push_back(vocab[rng.below(vocab.size())]);
  y = {"and", "she", "walked"};
  std::vector<std::size_t> nouns;
  for (std::size_t k = 0; k < n_nouns; ++k) nouns.push_back(1 + rng.below(x_len));
  return make_pair(std::move(x), std::move(nouns), std::move(y));
}

}  // namespace

TEST_CASE("encode_pair shapes") {
  Udssm1Params p = tiny_model(4, 8, 1);
  Rng rng(2);
  PairExampleI ex = sample_pair(rng, 10, 3);
  Encoded1 enc = encode_pair(p, ex);
  CHECK(enc.H_x.shape() == Shape{16, 10});
  CHECK(enc.H_n.shape() == Shape{16, 3});
  CHECK(enc.h_y.shape() == Shape{16});
}

TEST_CASE("encode_pair zero propagation") {
  Udssm1Params p = tiny_model(4, 3, 1, /*zero_lstms=*/true);
  PairExampleI ex = make_pair({"alpha", "beta", "gamma"}, {1, 3},
                              {"and", "she", "ran"});
  Encoded1 enc = encode_pair(p, ex);
  for (std::size_t i = 0; i < enc.H_n.numel(); ++i) CHECK(enc.H_n.at(i) == 0.0);
  for (std::size_t i = 0; i < enc.h_y.numel(); ++i) CHECK(enc.h_y.at(i) == 0.0);
}

TEST_CASE("encode_pair permutes noun columns with noun_positions") {
  Udssm1Params p = tiny_model(4, 4, 5);
  PairExampleI a = make_pair({"alpha", "beta", "gamma", "delta"}, {1, 3, 4},
                             {"and", "he", "left"});
  PairExampleI b = a;
  b.noun_positions = {4, 1, 3};
  Encoded1 ea = encode_pair(p, a), eb = encode_pair(p, b);
  for (std::size_t r = 0; r < 8; ++r) {
    CHECK(ea.H_n.at(r, 0) == eb.H_n.at(r, 1));
    CHECK(ea.H_n.at(r, 1) == eb.H_n.at(r, 2));
    CHECK(ea.H_n.at(r, 2) == eb.H_n.at(r, 0));
  }
}

TEST_CASE("encode_pair rejects bad noun positions") {
  Udssm1Params p = tiny_model(4, 4, 5);
  PairExampleI ex = make_pair({"alpha", "beta"}, {1, 7}, {"and", "he", "left"},
                              "bad#7");
  CHECK_THROWS_WITH(encode_pair(p, ex),
                    Catch::Matchers::ContainsSubstring("bad#7"));
}

TEST_CASE("attend_nouns uniform when the pronoun state is zero") {
  Udssm1Params p = tiny_model(4, 3, 9);
  Encoded1 enc;
  Rng rng(3);
  enc.H_n = Tensor::uniform({6, 4}, -1, 1, rng);
  enc.h_y = Tensor::zeros({6});
  auto [alpha, h_hat] = attend_nouns(p, enc);
  for (std::size_t k = 0; k < 4; ++k)
    CHECK_THAT(alpha.at(k), Catch::Matchers::WithinAbs(0.25, 1e-15));
  // weighted sum with uniform weights = column average
  for (std::size_t r = 0; r < 6; ++r) {
    double avg = 0;
    for (std::size_t c = 0; c < 4; ++c) avg += enc.H_n.at(r, c) * alpha.at(c);
    CHECK_THAT(h_hat.at(r), Catch::Matchers::WithinAbs(avg, 1e-15));
  }
}

TEST_CASE("attend_nouns degenerate single noun") {
  Udssm1Params p = tiny_model(4, 2, 9);
  Encoded1 enc;
  Rng rng(4);
  enc.H_n = Tensor::uniform({4, 1}, -1, 1, rng);
  enc.h_y = Tensor::uniform({4}, -1, 1, rng);
  auto [alpha, h_hat] = attend_nouns(p, enc);
  CHECK(alpha.at(0) == 1.0);
  for (std::size_t r = 0; r < 4; ++r) CHECK(h_hat.at(r) == enc.H_n.at(r, 0));
}

TEST_CASE("attend_nouns matches a hand-computed 2x2 case") {
  // l = 2 (h = 1), two nouns, b = 0, hand-set W and states
  Udssm1Params p;
  p.hidden = 1;
  p.gate.W = Tensor({2, 2}, {1.0, 2.0, -1.0, 0.5});
  p.gate.b = Tensor::zeros({2});
  Encoded1 enc;
  enc.H_n = Tensor({2, 2}, {0.3, -0.2,   // row 0: nouns 1,2
                            0.7, 0.4});  // row 1
  enc.h_y = Tensor({2}, {0.5, -1.0});

  // gated column k = W * h_k; logit k = gated_k . h_y
  double g00 = 1.0 * 0.3 + 2.0 * 0.7, g10 = -1.0 * 0.3 + 0.5 * 0.7;
  double g01 = 1.0 * -0.2 + 2.0 * 0.4, g11 = -1.0 * -0.2 + 0.5 * 0.4;
  double logit0 = g00 * 0.5 + g10 * -1.0;
  double logit1 = g01 * 0.5 + g11 * -1.0;
  double e0 = std::exp(logit0), e1 = std::exp(logit1);

  auto [alpha, h_hat] = attend_nouns(p, enc);
  CHECK_THAT(alpha.at(0), Catch::Matchers::WithinAbs(e0 / (e0 + e1), 1e-12));
  CHECK_THAT(alpha.at(1), Catch::Matchers::WithinAbs(e1 / (e0 + e1), 1e-12));
  CHECK_THAT(h_hat.at(0), Catch::Matchers::WithinAbs(
                              0.3 * alpha.at(0) + -0.2 * alpha.at(1), 1e-12));
}

TEST_CASE("alpha is a probability simplex on random inputs") {
  Udssm1Params p = tiny_model(4, 4, 21);
  Rng rng(8);
  for (int iter = 0; iter < 100; ++iter) {
    Encoded1 enc;
    std::size_t n = 1 + rng.below(6);
    enc.H_n = Tensor::uniform({8, n}, -3, 3, rng);
    enc.h_y = Tensor::uniform({8}, -3, 3, rng);
    auto [alpha, h_hat] = attend_nouns(p, enc);
    double total = 0;
    for (std::size_t k = 0; k < n; ++k) {
      CHECK(alpha.at(k) >= 0.0);
      total += alpha.at(k);
    }
    CHECK_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-12));
  }
}

TEST_CASE("score_candidate equals the attention logit bitwise") {
  Udssm1Params p = tiny_model(4, 4, 33);
  Rng rng(12);
  PairExampleI ex = sample_pair(rng, 8, 4);
  Encoded1 enc = encode_pair(p, ex);
  auto [alpha, h_hat] = attend_nouns(p, enc);

  std::vector<double> scores(4);
  for (std::size_t k = 0; k < 4; ++k) scores[k] = score_candidate(p, enc, k);
  Tensor rescored = softmax(Tensor({4}, scores));
  for (std::size_t k = 0; k < 4; ++k) CHECK(rescored.at(k) == alpha.at(k));

  CHECK_THROWS_AS(score_candidate(p, enc, 9), BoundsError);
}

TEST_CASE("score differences ignore a constant shift of the noun states") {
  Udssm1Params p = tiny_model(4, 4, 44);
  Rng rng(13);
  Encoded1 enc;
  enc.H_n = Tensor::uniform({8, 3}, -2, 2, rng);
  enc.h_y = Tensor::uniform({8}, -2, 2, rng);
  Tensor shift = Tensor::uniform({8}, -1, 1, rng);

  Encoded1 shifted = enc;
  shifted.H_n = add_bias(enc.H_n, shift);
  double d_before = score_candidate(p, enc, 0) - score_candidate(p, enc, 2);
  double d_after = score_candidate(p, shifted, 0) - score_candidate(p, shifted, 2);
  CHECK_THAT(d_after, Catch::Matchers::WithinAbs(d_before, 1e-9));
}

TEST_CASE("batch loss is ln B for identical representations") {
  Udssm1Params p = tiny_model(4, 4, 7, /*zero_lstms=*/true);
  Rng rng(3);
  std::vector<PairExampleI> batch;
  for (int k = 0; k < 4; ++k) batch.push_back(sample_pair(rng, 6, 2));
  Tensor loss = batch_nce_loss(p, batch);
  CHECK_THAT(loss.item(), Catch::Matchers::WithinAbs(std::log(4.0), 1e-9));
  CHECK(loss.item() >= 0.0);

  std::vector<PairExampleI> tiny = {batch[0]};
  CHECK_THROWS_AS(batch_nce_loss(p, tiny), ConfigError);
}

TEST_CASE("batch loss is invariant to batch order") {
  Udssm1Params p = tiny_model(4, 4, 17);
  Rng rng(5);
  std::vector<PairExampleI> batch;
  for (int k = 0; k < 5; ++k) batch.push_back(sample_pair(rng, 7, 3));
  double base = batch_nce_loss(p, batch).item();
  std::vector<PairExampleI> perm = {batch[3], batch[0], batch[4], batch[2],
                                    batch[1]};
  CHECK_THAT(batch_nce_loss(p, perm).item(),
             Catch::Matchers::WithinAbs(base, 1e-12));
}

TEST_CASE("udssm1 loss gradient passes the finite-difference check") {
  Udssm1Params p = tiny_model(8, 8, 512);
  Rng rng(6);
  std::vector<PairExampleI> batch;
  for (int k = 0; k < 4; ++k) batch.push_back(sample_pair(rng, 5 + k, 2 + k % 2));
  auto loss_fn = [&]() { return batch_nce_loss(p, batch); };
  auto report = finite_diff_check(loss_fn, p.named_params(), 1e-5, 1e-4, 12, 3);
  INFO("max rel error " << report.max_rel_error << " at " << report.worst_param
                        << "[" << report.worst_index << "]");
  CHECK(report.pass);
}

TEST_CASE("predict_question argmax and tie rule") {
  // zero gate weights make every score 0 -> earlier candidate wins
  Udssm1Params p = tiny_model(4, 3, 70);
  p.gate.W = Tensor::zeros({6, 6}).set_requires_grad(true);
  p.gate.b = Tensor::zeros({6}).set_requires_grad(true);
  Question q;
  q.id = "tie";
  q.tokens = {"alpha", "beta", "gamma", "delta", "saw", "it", "move"};
  q.pronoun_index = 6;
  q.candidates = {{1, 2, 'A'}, {3, 4, 'B'}};
  q.gold = 1;
  q.validate();
  Prediction pred = predict_question(p, q);
  CHECK(pred.chosen == 1);
  CHECK(pred.scores[0] == 0.0);
  CHECK(pred.scores[1] == 0.0);

  // with random params the prediction is deterministic and consistent with
  // its own scores
  Udssm1Params p2 = tiny_model(4, 3, 71);
  Prediction a = predict_question(p2, q);
  Prediction b = predict_question(p2, q);
  CHECK(a.chosen == b.chosen);
  CHECK(a.scores == b.scores);
  std::size_t best = a.scores[1] > a.scores[0] ? 2 : 1;
  CHECK(a.chosen == best);
}

TEST_CASE("predict_question rejects candidates after the pronoun") {
  Udssm1Params p = tiny_model(4, 3, 70);
  Question q;
  q.id = "late-candidate";
  q.tokens = {"alpha", "beta", "saw", "it", "near", "gamma", "delta"};
  q.pronoun_index = 4;
  q.candidates = {{1, 2, 'A'}, {6, 7, 'B'}};
  q.gold = 1;
  q.validate();
  CHECK_THROWS_AS(predict_question(p, q), UnsupportedQuestion);
  CHECK_THROWS_WITH(predict_question(p, q),
                    Catch::Matchers::ContainsSubstring("late-candidate"));
}

TEST_CASE("the councilmen schema runs end to end") {
  Udssm1Params p = tiny_model(6, 5, 99);
  Question q;
  q.id = "wsc-1";
  q.tokens = tokenize(
      "The city councilmen refused the demonstrators a permit because they "
      "feared violence.");
  q.pronoun_index = 10;
  REQUIRE(q.tokens[9] == "they");
  q.candidates = {{2, 3, 'A'}, {5, 6, 'B'}};
  q.gold = 1;
  q.validate();
  Prediction pred = predict_question(p, q);
  CHECK(pred.scores.size() == 2);
  CHECK((pred.chosen == 1 || pred.chosen == 2));
}
