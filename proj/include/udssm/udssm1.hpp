#ifndef UDSSM_UDSSM1_HPP
#define UDSSM_UDSSM1_HPP

#include <string>
#include <utility>
#include <vector>

#include "udssm/corpus.hpp"
#include "udssm/layers.hpp"
#include "udssm/question.hpp"
#include "udssm/tensor.hpp"

// The Assumption-I model: two distinct Bi-LSTM encoders over the split
// sentence, attention over the prefix noun states queried by the pronoun
// state, in-batch ranking loss and the shared gated scoring function.

namespace udssm {

struct Udssm1Params {
  EmbeddingTable emb;
  LstmParams enc_x_fwd, enc_x_bwd;  // prefix encoder
  LstmParams enc_y_fwd, enc_y_bwd;  // pronoun-side encoder, separate weights
  AffineParams gate;                // W^g, b^g with l = 2h
  std::size_t hidden = 0;

  std::size_t width() const { return 2 * hidden; }

  static Udssm1Params init(EmbeddingTable table, std::size_t h, Rng& rng) {
    Udssm1Params p;
    p.hidden = h;
    std::size_t d = table.dim;
    p.emb = std::move(table);
    p.enc_x_fwd = LstmParams::init(d, h, rng);
    p.enc_x_bwd = LstmParams::init(d, h, rng);
    p.enc_y_fwd = LstmParams::init(d, h, rng);
    p.enc_y_bwd = LstmParams::init(d, h, rng);
    p.gate = AffineParams::init(2 * h, rng);
    return p;
  }

  std::vector<std::pair<std::string, Tensor>> named_params() const {
    return {{"emb.matrix", emb.matrix},
            {"enc_x.fwd.U", enc_x_fwd.U}, {"enc_x.fwd.W", enc_x_fwd.W},
            {"enc_x.fwd.b", enc_x_fwd.b}, {"enc_x.bwd.U", enc_x_bwd.U},
            {"enc_x.bwd.W", enc_x_bwd.W}, {"enc_x.bwd.b", enc_x_bwd.b},
            {"enc_y.fwd.U", enc_y_fwd.U}, {"enc_y.fwd.W", enc_y_fwd.W},
            {"enc_y.fwd.b", enc_y_fwd.b}, {"enc_y.bwd.U", enc_y_bwd.U},
            {"enc_y.bwd.W", enc_y_bwd.W}, {"enc_y.bwd.b", enc_y_bwd.b},
            {"gate.W", gate.W},           {"gate.b", gate.b}};
  }
};

struct Encoded1 {
  Tensor H_x;  // {l, X} prefix states
  Tensor H_n;  // {l, N} noun states, in noun_positions order
  Tensor h_y;  // {l} pronoun state (column 2 of the suffix encoding)
};

// Dropout hits the embedding outputs and the final representations handed to
// the loss/scores; everything is the identity at inference.
inline Encoded1 encode_pair(const Udssm1Params& p, const PairExampleI& ex,
                            const DropoutPlan& plan = DropoutPlan::infer()) {
  for (std::size_t pos : ex.noun_positions) {
    if (pos == 0 || pos > ex.x_tokens.size()) {
      throw DataError("pair " + ex.source_id + ": noun position " +
                      std::to_string(pos) + " outside x (" +
                      std::to_string(ex.x_tokens.size()) + " tokens)");
    }
  }
  Encoded1 enc;
  Tensor sx = dropout(embed_sequence(p.emb, ex.x_tokens), plan);
  Tensor sy = dropout(embed_sequence(p.emb, ex.y_tokens), plan);
  enc.H_x = bilstm_forward(p.enc_x_fwd, p.enc_x_bwd, sx);
  Tensor h_y_states = bilstm_forward(p.enc_y_fwd, p.enc_y_bwd, sy);
  enc.h_y = dropout(column(h_y_states, 1), plan);  // pronoun sits at position 2
  std::vector<Tensor> cols;
  cols.reserve(ex.noun_positions.size());
  for (std::size_t pos : ex.noun_positions)
    cols.push_back(slice(enc.H_x, 1, pos - 1, pos));
  enc.H_n = dropout(concat(cols, 1), plan);
  return enc;
}

// alpha = softmax((W^g H_n + b^g)^T h_y), h_hat = H_n alpha.
inline std::pair<Tensor, Tensor> attend_nouns(const Udssm1Params& p,
                                              const Encoded1& enc) {
  const std::size_t l = enc.H_n.extent(0), n = enc.H_n.extent(1);
  Tensor gated = affine_map(p.gate, enc.H_n);  // {l, N}
  Tensor logits = reshape(matmul(transpose(gated), reshape(enc.h_y, {l, 1})), {n});
  Tensor alpha = softmax(logits);
  Tensor h_hat = reshape(matmul(enc.H_n, reshape(alpha, {n, 1})), {l});
  return {alpha, h_hat};
}

// Pre-softmax logit of noun i; bitwise identical to the attention logit
// because it runs the same per-column arithmetic with the shared gate.
inline double score_candidate(const Udssm1Params& p, const Encoded1& enc,
                              std::size_t i) {
  const std::size_t l = enc.H_n.extent(0), n = enc.H_n.extent(1);
  if (i >= n) {
    throw BoundsError("score_candidate: noun column " + std::to_string(i) +
                      " out of " + std::to_string(n));
  }
  Tensor gated = affine_map(p.gate, slice(enc.H_n, 1, i, i + 1));
  return dot(reshape(gated, {l}), enc.h_y).item();
}

// In-batch ranking loss: each example's positive pronoun state competes with
// the other B-1 pronoun states of the batch (K = B-1 negatives).
inline Tensor batch_nce_loss(const Udssm1Params& p,
                             const std::vector<PairExampleI>& batch,
                             const DropoutPlan& plan = DropoutPlan::infer()) {
  const std::size_t b = batch.size();
  if (b < 2) {
    throw ConfigError("batch_nce_loss: batch of " + std::to_string(b) +
                      " has no negatives; need at least 2");
  }
  std::vector<Tensor> h_hats(b), h_ys(b);
  for (std::size_t k = 0; k < b; ++k) {
    Encoded1 enc = encode_pair(p, batch[k], plan);
    h_ys[k] = enc.h_y;
    h_hats[k] = attend_nouns(p, enc).second;
  }
  std::vector<Tensor> losses(b);
  for (std::size_t k = 0; k < b; ++k) {
    std::vector<Tensor> logits(b);
    for (std::size_t m = 0; m < b; ++m) logits[m] = dot(h_hats[k], h_ys[m]);
    Tensor lsm = log_softmax(concat(logits, 0));
    losses[k] = scale(slice(lsm, 0, k, k + 1), -1.0);
  }
  return mean(concat(losses, 0));
}

// Scores each candidate of a WSC/PDP item with the attention logit of its
// span's final token. Requires the prefix split, so the pronoun must leave
// room for S^x and candidates must sit inside it.
inline Prediction predict_question(const Udssm1Params& p, const Question& q) {
  if (q.pronoun_index < 3) {
    throw UnsupportedQuestion("question " + q.id +
                              ": pronoun too early to form a prefix");
  }
  for (const auto& c : q.candidates) {
    if (c.end > q.pronoun_index - 2) {
      throw UnsupportedQuestion("question " + q.id + ": candidate '" +
                                std::string(1, c.label) +
                                "' does not precede the pronoun split");
    }
  }
  PairExampleI ex;
  ex.source_id = q.id;
  ex.x_tokens.assign(q.tokens.begin(), q.tokens.begin() + (q.pronoun_index - 2));
  ex.y_tokens.assign(q.tokens.begin() + (q.pronoun_index - 2), q.tokens.end());
  for (const auto& c : q.candidates) ex.noun_positions.push_back(c.end);

  Encoded1 enc = encode_pair(p, ex);
  std::vector<double> scores(q.candidates.size());
  for (std::size_t k = 0; k < scores.size(); ++k)
    scores[k] = score_candidate(p, enc, k);
  return argmax_prediction(std::move(scores));
}

}  // namespace udssm

#endif  // UDSSM_UDSSM1_HPP
