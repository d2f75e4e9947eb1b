#ifndef UDSSM_TRAINER_HPP
#define UDSSM_TRAINER_HPP

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "udssm/udssm1.hpp"
#include "udssm/udssm2.hpp"

// Adamax optimization, train/validation handling with early stopping, and
// the binary checkpoint format.

namespace udssm {

struct TrainConfig {
  double learning_rate = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double dropout = 0.0;          // paper grid: 0, 0.1, 0.2
  std::size_t batch_size = 50;   // paper grid: 30, 50, 100, 200
  std::size_t max_epochs = 10;
  std::size_t patience = 3;      // non-improving epochs before stopping
  std::uint64_t seed = 0;
  double validation_fraction = 0.05;

  void validate(bool needs_negatives) const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
      throw ConfigError("beta1/beta2 must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) {
      throw ConfigError("dropout must lie in [0, 1)");
    }
    if (batch_size < (needs_negatives ? 2u : 1u)) {
      throw ConfigError("batch size too small: in-batch negatives need >= 2");
    }
    if (!(validation_fraction > 0.0 && validation_fraction <= 0.5)) {
      throw ConfigError("validation fraction must lie in (0, 0.5]");
    }
  }
};

// Per-parameter first moment and infinity-norm accumulator.
struct AdamaxState {
  std::vector<std::vector<double>> m, u;
  std::uint64_t t = 0;

  static AdamaxState init_for(
      const std::vector<std::pair<std::string, Tensor>>& params) {
    AdamaxState s;
    for (const auto& [name, tensor] : params) {
      s.m.emplace_back(tensor.numel(), 0.0);
      s.u.emplace_back(tensor.numel(), 0.0);
    }
    return s;
  }
};

// One update: m <- b1 m + (1-b1) g, u <- max(b2 u, |g|),
// theta <- theta - lr/(1-b1^t) * m/(u+eps). Gradients are read from the
// tensors and must be finite.
inline void adamax_step(AdamaxState& state,
                        const std::vector<std::pair<std::string, Tensor>>& params,
                        const TrainConfig& cfg) {
  ++state.t;
  const double bias = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double step_size = cfg.learning_rate / bias;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor t = params[p].second;
    const bool has = t.has_grad();
    auto& m = state.m[p];
    auto& u = state.u[p];
    auto& theta = t.values_mut();
    const auto& g = t.grad();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      double gi = has ? g[i] : 0.0;
      if (!std::isfinite(gi)) {
        throw Error("training aborted: non-finite gradient in parameter " +
                    params[p].first);
      }
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      u[i] = std::max(cfg.beta2 * u[i], std::abs(gi));
      theta[i] -= step_size * m[i] / (u[i] + cfg.epsilon);
    }
  }
}

// Seeded shuffle, then the first round(n * fraction) records become the
// validation set. Disjoint, exhaustive and deterministic per seed.
template <class T>
std::pair<std::vector<T>, std::vector<T>> split_train_val(
    const std::vector<T>& records, double fraction, std::uint64_t seed) {
  if (records.empty()) throw ConfigError("split_train_val: no records");
  if (!(fraction > 0.0 && fraction <= 0.5)) {
    throw ConfigError("split_train_val: fraction must lie in (0, 0.5]");
  }
  std::vector<std::size_t> idx(records.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  auto val_n = static_cast<std::size_t>(
      std::llround(static_cast<double>(records.size()) * fraction));
  std::pair<std::vector<T>, std::vector<T>> out;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    (k < val_n ? out.second : out.first).push_back(records[idx[k]]);
  }
  return out;
}

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_metric = 0.0;
};

struct FitResult {
  std::vector<EpochStats> history;
  double best_metric = 0.0;
  std::size_t best_epoch = 0;  // 0 = initial parameters
};

namespace detail {

inline std::vector<std::vector<double>> snapshot_values(
    const std::vector<std::pair<std::string, Tensor>>& params) {
  std::vector<std::vector<double>> out;
  out.reserve(params.size());
  for (const auto& [name, t] : params) out.push_back(t.values());
  return out;
}

inline void restore_values(
    const std::vector<std::pair<std::string, Tensor>>& params,
    const std::vector<std::vector<double>>& snap) {
  for (std::size_t p = 0; p < params.size(); ++p)
    Tensor(params[p].second).values_mut() = snap[p];
}

// Shared epoch loop. loss_fn(indices, plan) -> scalar loss tensor;
// metric_fn() -> validation metric (higher is better). When there is no
// validation data metric_fn returns -train_loss so early stopping still
// tracks progress.
template <class LossFn, class MetricFn>
FitResult fit_loop(const std::vector<std::pair<std::string, Tensor>>& params,
                   std::size_t n_train, bool needs_negatives,
                   const TrainConfig& cfg, LossFn&& loss_fn,
                   MetricFn&& metric_fn) {
  cfg.validate(needs_negatives);
  FitResult result;
  if (cfg.max_epochs == 0) return result;

  AdamaxState state = AdamaxState::init_for(params);
  Rng shuffle_rng(cfg.seed);
  Rng dropout_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

  auto best = snapshot_values(params);
  result.best_metric = metric_fn();
  std::size_t bad_epochs = 0;

  std::vector<std::size_t> order(n_train);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_total = 0.0;
    std::size_t counted = 0;
    for (std::size_t start = 0; start < n_train; start += cfg.batch_size) {
      std::size_t end = std::min(start + cfg.batch_size, n_train);
      if (needs_negatives && end - start < 2) continue;  // no negatives left
      std::vector<std::size_t> batch(order.begin() + start, order.begin() + end);
      for (const auto& [name, t] : params) Tensor(t).zero_grad();
      DropoutPlan plan = cfg.dropout > 0.0
                             ? DropoutPlan::train(cfg.dropout, dropout_rng)
                             : DropoutPlan::infer();
      Tensor loss = loss_fn(batch, plan);
      backward(loss);
      adamax_step(state, params, cfg);
      loss_total += loss.item() * static_cast<double>(batch.size());
      counted += batch.size();
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = counted ? loss_total / static_cast<double>(counted) : 0.0;
    stats.val_metric = metric_fn();
    result.history.push_back(stats);

    if (stats.val_metric > result.best_metric) {
      result.best_metric = stats.val_metric;
      result.best_epoch = epoch;
      best = snapshot_values(params);
      bad_epochs = 0;
    } else if (++bad_epochs >= cfg.patience) {
      break;
    }
  }
  restore_values(params, best);
  return result;
}

}  // namespace detail

// Validation metric: fraction of examples whose positive logit beats every
// in-batch negative. A trailing singleton window borrows one neighbour so it
// still has a negative.
inline double udssm1_ranking_metric(const Udssm1Params& model,
                                    const std::vector<PairExampleI>& val,
                                    std::size_t batch_size) {
  if (val.size() < 2) return 0.0;
  batch_size = std::max<std::size_t>(batch_size, 2);
  std::size_t correct = 0, total = 0;
  for (std::size_t start = 0; start < val.size();) {
    std::size_t end = std::min(start + batch_size, val.size());
    std::size_t first_counted = start;
    if (end - start < 2) {
      start = end - 2;  // borrow one example as negative only
    }
    std::vector<Tensor> h_hats, h_ys;
    for (std::size_t k = start; k < end; ++k) {
      Encoded1 enc = encode_pair(model, val[k]);
      h_ys.push_back(enc.h_y);
      h_hats.push_back(attend_nouns(model, enc).second);
    }
    for (std::size_t k = start; k < end; ++k) {
      if (k < first_counted) continue;
      double pos = dot(h_hats[k - start], h_ys[k - start]).item();
      bool wins = true;
      for (std::size_t m = start; m < end; ++m) {
        if (m == k) continue;
        if (dot(h_hats[k - start], h_ys[m - start]).item() >= pos) {
          wins = false;
          break;
        }
      }
      correct += wins;
      ++total;
    }
    start = end;
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

// Validation metric: two-logit classification accuracy.
inline double udssm2_accuracy(const Udssm2Params& model,
                              const std::vector<PairExampleII>& val) {
  if (val.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : val) {
    Encoded2 enc = encode_sentence(model, ex.tokens);
    Tensor h_c = concat(
        {context_rep(enc, ex.i, ex.i), context_rep(enc, ex.j, ex.j)}, 0);
    bool predicted_pos = dot(model.w_p, h_c).item() > dot(model.w_n, h_c).item();
    correct += predicted_pos == (ex.label == 1);
  }
  return static_cast<double>(correct) / static_cast<double>(val.size());
}

inline FitResult fit(Udssm1Params& model, const std::vector<PairExampleI>& train,
                     const std::vector<PairExampleI>& val, const TrainConfig& cfg) {
  auto params = model.named_params();
  return detail::fit_loop(
      params, train.size(), /*needs_negatives=*/true, cfg,
      [&](const std::vector<std::size_t>& batch, const DropoutPlan& plan) {
        std::vector<PairExampleI> examples;
        examples.reserve(batch.size());
        for (std::size_t k : batch) examples.push_back(train[k]);
        return batch_nce_loss(model, examples, plan);
      },
      [&]() {
        if (val.empty()) {
          // no validation data: early stopping tracks a train-side loss
          std::vector<PairExampleI> probe(
              train.begin(),
              train.begin() + std::min<std::size_t>(train.size(), cfg.batch_size));
          return probe.size() >= 2 ? -batch_nce_loss(model, probe).item() : 0.0;
        }
        return udssm1_ranking_metric(model, val, cfg.batch_size);
      });
}

inline FitResult fit(Udssm2Params& model, const std::vector<PairExampleII>& train,
                     const std::vector<PairExampleII>& val, const TrainConfig& cfg) {
  auto params = model.named_params();
  return detail::fit_loop(
      params, train.size(), /*needs_negatives=*/false, cfg,
      [&](const std::vector<std::size_t>& batch, const DropoutPlan& plan) {
        std::vector<PairExampleII> examples;
        examples.reserve(batch.size());
        for (std::size_t k : batch) examples.push_back(train[k]);
        return pair_loss(model, examples, plan);
      },
      [&]() {
        if (val.empty()) return -pair_loss(model, train).item();
        return udssm2_accuracy(model, val);
      });
}

// ---------------------------------------------------------------------------
// Checkpoints: magic "UDSSMCKP" + version u32 LE + kind byte + length-prefixed
// key=value header + repeated named tensor records. Bit-exact round-trips.

constexpr char kCheckpointMagic[8] = {'U', 'D', 'S', 'S', 'M', 'C', 'K', 'P'};
constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void write_u32(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff),
               static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

inline void write_f64(std::ostream& out, double d) {
  auto v = std::bit_cast<std::uint64_t>(d);
  char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xff);
  out.write(b, 8);
}

inline std::uint32_t read_u32(std::istream& in, const std::string& what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw FormatError("checkpoint truncated while reading " + what);
  }
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

inline double read_f64(std::istream& in, const std::string& what) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) {
    throw FormatError("checkpoint truncated while reading " + what);
  }
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
  return std::bit_cast<double>(v);
}

}  // namespace detail

inline void checkpoint_save(
    const std::string& path, int kind,
    const std::vector<std::pair<std::string, std::string>>& hyper,
    const std::vector<std::pair<std::string, Tensor>>& tensors) {
  if (kind != 1 && kind != 2) {
    throw FormatError("checkpoint_save: kind must be 1 or 2");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("checkpoint_save: cannot open " + path);
  out.write(kCheckpointMagic, 8);
  detail::write_u32(out, kCheckpointVersion);
  out.put(static_cast<char>(kind));
  std::string header;
  for (const auto& [k, v] : hyper) header += k + "=" + v + "\n";
  detail::write_u32(out, static_cast<std::uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& [name, t] : tensors) {
    detail::write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::write_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d = 0; d < t.rank(); ++d)
      detail::write_u32(out, static_cast<std::uint32_t>(t.shape()[d]));
    for (std::size_t i = 0; i < t.numel(); ++i) detail::write_f64(out, t.at(i));
  }
  if (!out) throw FormatError("checkpoint_save: write failed for " + path);
}

struct LoadedCheckpoint {
  std::uint32_t version = 0;
  int kind = 0;
  std::vector<std::pair<std::string, std::string>> hyper;  // order preserved
  std::vector<std::pair<std::string, Tensor>> tensors;     // order preserved

  const Tensor& tensor(const std::string& name) const {
    for (const auto& [n, t] : tensors)
      if (n == name) return t;
    throw FormatError("checkpoint: missing tensor '" + name + "'");
  }

  std::string hyper_value(const std::string& key) const {
    for (const auto& [k, v] : hyper)
      if (k == key) return v;
    throw FormatError("checkpoint: missing hyperparameter '" + key + "'");
  }
};

inline LoadedCheckpoint checkpoint_load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("checkpoint_load: cannot open " + path);
  char magic[8];
  if (!in.read(magic, 8) || !std::equal(magic, magic + 8, kCheckpointMagic)) {
    throw FormatError("checkpoint_load: bad magic in " + path);
  }
  LoadedCheckpoint ck;
  ck.version = detail::read_u32(in, "version");
  if (ck.version != kCheckpointVersion) {
    throw FormatError("checkpoint_load: unsupported version " +
                      std::to_string(ck.version));
  }
  int kind = in.get();
  if (kind != 1 && kind != 2) {
    throw FormatError("checkpoint_load: bad model kind byte");
  }
  ck.kind = kind;
  std::uint32_t header_len = detail::read_u32(in, "header length");
  std::string header(header_len, '\0');
  if (!in.read(header.data(), header_len)) {
    throw FormatError("checkpoint truncated while reading header");
  }
  std::size_t pos = 0;
  while (pos < header.size()) {
    std::size_t nl = header.find('\n', pos);
    if (nl == std::string::npos) nl = header.size();
    std::string line = header.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("checkpoint_load: malformed header line '" + line + "'");
    }
    ck.hyper.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  while (true) {
    in.peek();
    if (in.eof()) break;
    std::uint32_t name_len = detail::read_u32(in, "tensor name length");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) {
      throw FormatError("checkpoint truncated while reading tensor name");
    }
    std::uint32_t rank = detail::read_u32(in, "tensor rank");
    Shape shape(rank);
    for (std::uint32_t d = 0; d < rank; ++d)
      shape[d] = detail::read_u32(in, "tensor extent");
    std::vector<double> values(shape_numel(shape));
    for (auto& v : values) v = detail::read_f64(in, "tensor value");
    ck.tensors.emplace_back(std::move(name),
                            Tensor(std::move(shape), std::move(values)));
  }
  return ck;
}

// ---------------------------------------------------------------------------
// Model <-> checkpoint adapters. The vocabulary travels in the header as
// vocab.<row>=<token> lines so a loaded model reproduces predictions bitwise.

namespace detail {

inline std::size_t parse_size(const std::string& s, const std::string& what) {
  try {
    std::size_t consumed = 0;
    auto v = std::stoul(s, &consumed);
    if (consumed != s.size()) throw FormatError("");
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw FormatError("checkpoint: bad " + what + " value '" + s + "'");
  }
}

inline std::vector<std::pair<std::string, std::string>> model_header(
    std::size_t dim, std::size_t hidden, const EmbeddingTable& emb,
    const std::vector<std::pair<std::string, std::string>>& extra) {
  std::vector<std::pair<std::string, std::string>> hyper;
  hyper.emplace_back("dim", std::to_string(dim));
  hyper.emplace_back("hidden", std::to_string(hidden));
  for (const auto& kv : extra) hyper.push_back(kv);
  for (std::size_t r = 0; r < emb.row_tokens.size(); ++r)
    hyper.emplace_back("vocab." + std::to_string(r), emb.row_tokens[r]);
  return hyper;
}

inline EmbeddingTable table_from_checkpoint(const LoadedCheckpoint& ck) {
  EmbeddingTable emb;
  emb.dim = parse_size(ck.hyper_value("dim"), "dim");
  for (const auto& [k, v] : ck.hyper) {
    if (k.rfind("vocab.", 0) != 0) continue;
    std::size_t row = parse_size(k.substr(6), "vocab row");
    if (row != emb.row_tokens.size()) {
      throw FormatError("checkpoint: vocab rows out of order at " + k);
    }
    emb.row_tokens.push_back(v);
    emb.vocab[v] = row;
  }
  if (emb.row_tokens.size() < 2 || emb.row_tokens[0] != EmbeddingTable::kOov ||
      emb.row_tokens[1] != EmbeddingTable::kPlaceholder) {
    throw FormatError("checkpoint: reserved vocabulary rows missing");
  }
  emb.oov_row = 0;
  emb.placeholder_row = 1;
  emb.matrix = ck.tensor("emb.matrix").clone_values();
  if (emb.matrix.shape() != Shape{emb.row_tokens.size(), emb.dim}) {
    throw FormatError("checkpoint: embedding matrix shape mismatch");
  }
  emb.matrix.set_requires_grad(true);
  return emb;
}

inline LstmParams lstm_from_checkpoint(const LoadedCheckpoint& ck,
                                       const std::string& prefix,
                                       std::size_t d, std::size_t h) {
  LstmParams p;
  p.hidden = h;
  p.input_dim = d;
  p.U = ck.tensor(prefix + ".U").clone_values();
  p.W = ck.tensor(prefix + ".W").clone_values();
  p.b = ck.tensor(prefix + ".b").clone_values();
  if (p.U.shape() != Shape{4 * h, d} || p.W.shape() != Shape{4 * h, h} ||
      p.b.shape() != Shape{4 * h}) {
    throw FormatError("checkpoint: LSTM shapes for " + prefix +
                      " disagree with dim/hidden header");
  }
  p.U.set_requires_grad(true);
  p.W.set_requires_grad(true);
  p.b.set_requires_grad(true);
  return p;
}

}  // namespace detail

inline void save_udssm1(
    const std::string& path, const Udssm1Params& model,
    const std::vector<std::pair<std::string, std::string>>& extra_hyper = {}) {
  checkpoint_save(path, 1,
                  detail::model_header(model.emb.dim, model.hidden, model.emb,
                                       extra_hyper),
                  model.named_params());
}

inline void save_udssm2(
    const std::string& path, const Udssm2Params& model,
    const std::vector<std::pair<std::string, std::string>>& extra_hyper = {}) {
  checkpoint_save(path, 2,
                  detail::model_header(model.emb.dim, model.hidden, model.emb,
                                       extra_hyper),
                  model.named_params());
}

inline Udssm1Params udssm1_from_checkpoint(const LoadedCheckpoint& ck) {
  if (ck.kind != 1) {
    throw FormatError("checkpoint holds a UDSSM-" + std::to_string(ck.kind) +
                      " model, expected UDSSM-1");
  }
  Udssm1Params p;
  p.emb = detail::table_from_checkpoint(ck);
  p.hidden = detail::parse_size(ck.hyper_value("hidden"), "hidden");
  std::size_t d = p.emb.dim, h = p.hidden;
  p.enc_x_fwd = detail::lstm_from_checkpoint(ck, "enc_x.fwd", d, h);
  p.enc_x_bwd = detail::lstm_from_checkpoint(ck, "enc_x.bwd", d, h);
  p.enc_y_fwd = detail::lstm_from_checkpoint(ck, "enc_y.fwd", d, h);
  p.enc_y_bwd = detail::lstm_from_checkpoint(ck, "enc_y.bwd", d, h);
  p.gate.W = ck.tensor("gate.W").clone_values().set_requires_grad(true);
  p.gate.b = ck.tensor("gate.b").clone_values().set_requires_grad(true);
  if (p.gate.W.shape() != Shape{2 * h, 2 * h} || p.gate.b.shape() != Shape{2 * h}) {
    throw FormatError("checkpoint: gate shapes disagree with hidden header");
  }
  return p;
}

inline Udssm2Params udssm2_from_checkpoint(const LoadedCheckpoint& ck) {
  if (ck.kind != 2) {
    throw FormatError("checkpoint holds a UDSSM-" + std::to_string(ck.kind) +
                      " model, expected UDSSM-2");
  }
  Udssm2Params p;
  p.emb = detail::table_from_checkpoint(ck);
  p.hidden = detail::parse_size(ck.hyper_value("hidden"), "hidden");
  std::size_t d = p.emb.dim, h = p.hidden;
  p.fwd = detail::lstm_from_checkpoint(ck, "fwd", d, h);
  p.bwd = detail::lstm_from_checkpoint(ck, "bwd", d, h);
  p.w_p = ck.tensor("w_p").clone_values().set_requires_grad(true);
  p.w_n = ck.tensor("w_n").clone_values().set_requires_grad(true);
  if (p.w_p.shape() != Shape{4 * h} || p.w_n.shape() != Shape{4 * h}) {
    throw FormatError("checkpoint: w_p/w_n length disagrees with hidden header");
  }
  return p;
}

inline Udssm1Params load_udssm1(const std::string& path) {
  return udssm1_from_checkpoint(checkpoint_load(path));
}

inline Udssm2Params load_udssm2(const std::string& path) {
  return udssm2_from_checkpoint(checkpoint_load(path));
}

}  // namespace udssm

#endif  // UDSSM_TRAINER_HPP
