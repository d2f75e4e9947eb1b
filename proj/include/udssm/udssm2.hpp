#ifndef UDSSM_UDSSM2_HPP
#define UDSSM_UDSSM2_HPP

#include <string>
#include <utility>
#include <vector>

#include "udssm/corpus.hpp"
#include "udssm/layers.hpp"
#include "udssm/question.hpp"
#include "udssm/tensor.hpp"

// The Assumption-II model: one forward and one backward LSTM over the whole
// sentence, boundary-state context representations around each pronoun, a
// two-logit cross-entropy over the concatenated pair, and candidate scoring
// with the positive-class weights.

namespace udssm {

struct Udssm2Params {
  EmbeddingTable emb;
  LstmParams fwd, bwd;
  Tensor w_p, w_n;  // {4h} each
  std::size_t hidden = 0;

  static Udssm2Params init(EmbeddingTable table, std::size_t h, Rng& rng) {
    Udssm2Params p;
    p.hidden = h;
    std::size_t d = table.dim;
    p.emb = std::move(table);
    p.fwd = LstmParams::init(d, h, rng);
    p.bwd = LstmParams::init(d, h, rng);
    p.w_p = glorot_uniform({4 * h}, 4 * h, 1, rng).set_requires_grad(true);
    p.w_n = glorot_uniform({4 * h}, 4 * h, 1, rng).set_requires_grad(true);
    return p;
  }

  std::vector<std::pair<std::string, Tensor>> named_params() const {
    return {{"emb.matrix", emb.matrix}, {"fwd.U", fwd.U}, {"fwd.W", fwd.W},
            {"fwd.b", fwd.b},           {"bwd.U", bwd.U}, {"bwd.W", bwd.W},
            {"bwd.b", bwd.b},           {"w_p", w_p},     {"w_n", w_n}};
  }
};

struct Encoded2 {
  Tensor F;   // {h, T} forward states
  Tensor Bk;  // {h, T} backward states, aligned to original positions
};

inline Encoded2 encode_sentence(const Udssm2Params& p,
                                const std::vector<std::string>& tokens,
                                const DropoutPlan& plan = DropoutPlan::infer()) {
  if (tokens.size() < 3) {
    throw DataError("encode_sentence: need at least 3 tokens, got " +
                    std::to_string(tokens.size()));
  }
  Tensor e = dropout(embed_sequence(p.emb, tokens), plan);
  Encoded2 enc;
  enc.F = lstm_forward(p.fwd, e, Direction::Forward);
  enc.Bk = lstm_forward(p.bwd, e, Direction::Backward);
  return enc;
}

// [forward state before the span ; backward state after the span]. The span
// itself is excluded, which is what makes placeholder masking sound.
inline Tensor context_rep(const Encoded2& enc, std::size_t s, std::size_t e) {
  const std::size_t t = enc.F.extent(1);
  if (!(2 <= s && s <= e && e + 1 <= t)) {
    throw BoundsError("context_rep: span [" + std::to_string(s) + "," +
                      std::to_string(e) + "] touches the boundary of " +
                      std::to_string(t) + " tokens");
  }
  return concat({column(enc.F, s - 2), column(enc.Bk, e)}, 0);  // {2h}
}

// Cross-entropy over (w_p . h_c, w_n . h_c) with h_c = [h_x ; h_y].
inline Tensor pair_loss(const Udssm2Params& p,
                        const std::vector<PairExampleII>& batch,
                        const DropoutPlan& plan = DropoutPlan::infer()) {
  if (batch.empty()) throw ConfigError("pair_loss: empty batch");
  std::vector<Tensor> losses;
  losses.reserve(batch.size());
  for (const auto& ex : batch) {
    const std::size_t t = ex.tokens.size();
    if (!(2 <= ex.i && ex.i + 1 <= t && 2 <= ex.j && ex.j + 1 <= t)) {
      throw BoundsError("pair " + ex.source_id +
                        ": pronoun position at sentence boundary");
    }
    Encoded2 enc = encode_sentence(p, ex.tokens, plan);
    Tensor h_x = context_rep(enc, ex.i, ex.i);
    Tensor h_y = context_rep(enc, ex.j, ex.j);
    Tensor h_c = dropout(concat({h_x, h_y}, 0), plan);  // {4h}
    Tensor lsm = log_softmax(concat({dot(p.w_p, h_c), dot(p.w_n, h_c)}, 0));
    std::size_t pick = ex.label == 1 ? 0 : 1;
    losses.push_back(scale(slice(lsm, 0, pick, pick + 1), -1.0));
  }
  return mean(concat(losses, 0));
}

// w_p . [context of the candidate span ; context of the pronoun].
inline double score_candidate(const Udssm2Params& p, const Encoded2& enc,
                              std::size_t s, std::size_t e, std::size_t j) {
  if (s <= j && j <= e) {
    throw DataError("score_candidate: candidate span [" + std::to_string(s) +
                    "," + std::to_string(e) + "] contains the pronoun at " +
                    std::to_string(j));
  }
  Tensor h_c = concat({context_rep(enc, s, e), context_rep(enc, j, j)}, 0);
  return dot(p.w_p, h_c).item();
}

// Each candidate is rewritten to the placeholder token (single token, so
// multi-token spans shrink the sentence) and the masked sentence is
// re-encoded, matching the training distribution where position i always
// holds "@Ponoun". The anchor pronoun stays visible.
inline Prediction predict_question(const Udssm2Params& p, const Question& q) {
  const std::size_t t = q.tokens.size();
  std::vector<double> scores;
  scores.reserve(q.candidates.size());
  for (const auto& c : q.candidates) {
    if (!(2 <= c.start && c.end + 1 <= t)) {
      throw UnsupportedQuestion("question " + q.id + ": candidate '" +
                                std::string(1, c.label) +
                                "' touches the sentence boundary");
    }
    std::vector<std::string> masked;
    masked.reserve(t - (c.end - c.start));
    masked.insert(masked.end(), q.tokens.begin(), q.tokens.begin() + (c.start - 1));
    masked.push_back(kPlaceholderToken);
    masked.insert(masked.end(), q.tokens.begin() + c.end, q.tokens.end());
    std::size_t i = c.start;
    std::size_t j = q.pronoun_index > c.end
                        ? q.pronoun_index - (c.end - c.start)
                        : q.pronoun_index;
    const std::size_t tm = masked.size();
    if (!(2 <= j && j + 1 <= tm)) {
      throw UnsupportedQuestion("question " + q.id +
                                ": pronoun at the sentence boundary");
    }
    Encoded2 enc = encode_sentence(p, masked);
    scores.push_back(score_candidate(p, enc, i, i, j));
  }
  return argmax_prediction(std::move(scores));
}

}  // namespace udssm

#endif  // UDSSM_UDSSM2_HPP
