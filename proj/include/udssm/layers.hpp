#ifndef UDSSM_LAYERS_HPP
#define UDSSM_LAYERS_HPP

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "udssm/tensor.hpp"

// Embedding table with GloVe loading, LSTM encoders and inverted dropout.

namespace udssm {

inline std::string lowercase(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Token -> trainable row. Rows are stored as a {V, d} matrix so one row is
// contiguous. Two reserved rows always exist: the OOV row and the literal
// placeholder token "@Ponoun", both matched case-sensitively; every other
// lookup goes through lowercasing.
struct EmbeddingTable {
  static constexpr const char* kOov = "<oov>";
  static constexpr const char* kPlaceholder = "@Ponoun";

  std::unordered_map<std::string, std::size_t> vocab;
  std::vector<std::string> row_tokens;  // row -> token, fixes serialization order
  Tensor matrix;                        // {V, d}
  std::size_t dim = 0;
  std::size_t oov_row = 0;
  std::size_t placeholder_row = 1;

  std::size_t size() const { return row_tokens.size(); }

  std::size_t row_for(const std::string& token) const {
    if (token == kPlaceholder) return placeholder_row;
    if (token == kOov) return oov_row;
    auto it = vocab.find(lowercase(token));
    return it == vocab.end() ? oov_row : it->second;
  }

  // Builds the row index: reserved rows first, then the filter tokens
  // (lowercased, deduplicated, in the given order). All rows start from the
  // seeded uniform [-0.1, 0.1] init; load_glove overwrites matched rows.
  static EmbeddingTable create(const std::vector<std::string>& tokens,
                               std::size_t dim, Rng& rng) {
    EmbeddingTable t;
    t.dim = dim;
    t.row_tokens = {kOov, kPlaceholder};
    t.vocab[kOov] = 0;
    t.vocab[kPlaceholder] = 1;
    for (const auto& raw : tokens) {
      if (raw == kPlaceholder || raw == kOov) continue;
      std::string tok = lowercase(raw);
      if (tok.empty() || t.vocab.count(tok)) continue;
      t.vocab[tok] = t.row_tokens.size();
      t.row_tokens.push_back(tok);
    }
    t.matrix = Tensor::uniform({t.row_tokens.size(), dim}, -0.1, 0.1, rng);
    t.matrix.set_requires_grad(true);
    return t;
  }
};

// Reads `token v1 ... vd` lines and fills rows of a fresh table built from
// `vocab_filter`. An empty filter keeps every token in the file. Duplicate
// tokens: last occurrence wins; the count lands in *duplicate_warnings.
inline EmbeddingTable load_glove(const std::string& path, std::size_t dim,
                                 const std::vector<std::string>& vocab_filter,
                                 Rng& rng,
                                 std::size_t* duplicate_warnings = nullptr) {
  std::ifstream in(path);
  if (!in) throw ParseError("load_glove: cannot open " + path);

  std::vector<std::string> tokens = vocab_filter;
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  std::size_t line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    std::vector<double> vec;
    vec.reserve(dim);
    double x;
    while (ss >> x) vec.push_back(x);
    if (vec.size() != dim) {
      throw ParseError("load_glove: " + path + ":" + std::to_string(line_no) +
                       ": expected " + std::to_string(dim) + " values, got " +
                       std::to_string(vec.size()));
    }
    rows.emplace_back(std::move(token), std::move(vec));
    if (vocab_filter.empty()) tokens.push_back(rows.back().first);
  }

  EmbeddingTable table = EmbeddingTable::create(tokens, dim, rng);
  std::size_t duplicates = 0;
  std::vector<bool> written(table.size(), false);
  for (const auto& [token, vec] : rows) {
    auto it = table.vocab.find(token);
    if (it == table.vocab.end()) continue;
    if (written[it->second]) ++duplicates;
    written[it->second] = true;
    std::copy(vec.begin(), vec.end(),
              table.matrix.values_mut().begin() + it->second * dim);
  }
  if (duplicate_warnings) *duplicate_warnings = duplicates;
  return table;
}

// Column t is the embedding row for tokens[t]; gradient scatters back into
// the table rows that were used.
inline Tensor embed_sequence(const EmbeddingTable& table,
                             const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw DimensionError("embed_sequence: empty sequence");
  const std::size_t d = table.dim, T = tokens.size();
  std::vector<std::size_t> idx(T);
  for (std::size_t t = 0; t < T; ++t) idx[t] = table.row_for(tokens[t]);
  std::vector<double> out(d * T);
  const auto& m = table.matrix.values();
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t r = 0; r < d; ++r) out[r * T + t] = m[idx[t] * d + r];
  auto mn = table.matrix.node();
  return make_op({d, T}, std::move(out), {table.matrix},
                 [mn, idx, d, T](detail::Node& self) {
    mn->ensure_grad();
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t r = 0; r < d; ++r)
        mn->grad[idx[t] * d + r] += self.grad[r * T + t];
  });
}

inline Tensor glorot_uniform(Shape shape, std::size_t fan_in,
                             std::size_t fan_out, Rng& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return Tensor::uniform(std::move(shape), -limit, limit, rng);
}

// Single-direction LSTM weights; gate rows ordered (input, forget, cell,
// output). Biases start at zero except the forget gate block at 1.
struct LstmParams {
  Tensor U;  // {4h, d}
  Tensor W;  // {4h, h}
  Tensor b;  // {4h}
  std::size_t hidden = 0;
  std::size_t input_dim = 0;

  static LstmParams init(std::size_t d, std::size_t h, Rng& rng) {
    LstmParams p;
    p.hidden = h;
    p.input_dim = d;
    p.U = glorot_uniform({4 * h, d}, d, h, rng).set_requires_grad(true);
    p.W = glorot_uniform({4 * h, h}, h, h, rng).set_requires_grad(true);
    std::vector<double> bias(4 * h, 0.0);
    for (std::size_t i = h; i < 2 * h; ++i) bias[i] = 1.0;
    p.b = Tensor({4 * h}, std::move(bias)).set_requires_grad(true);
    return p;
  }

  static LstmParams zeros(std::size_t d, std::size_t h) {
    LstmParams p;
    p.hidden = h;
    p.input_dim = d;
    p.U = Tensor::zeros({4 * h, d}).set_requires_grad(true);
    p.W = Tensor::zeros({4 * h, h}).set_requires_grad(true);
    p.b = Tensor::zeros({4 * h}).set_requires_grad(true);
    return p;
  }
};

enum class Direction { Forward, Backward };

// Standard recurrence with zero initial state:
//   z_t = U x_t + W h_{t-1} + b
//   c_t = sigmoid(z_f) . c_{t-1} + sigmoid(z_i) . tanh(z_g)
//   h_t = sigmoid(z_o) . tanh(c_t)
// The backward direction consumes the input reversed and reports states
// aligned to the original positions.
inline Tensor lstm_forward(const LstmParams& p, const Tensor& inputs,
                           Direction dir) {
  if (inputs.rank() != 2 || inputs.extent(0) != p.input_dim) {
    throw DimensionError("lstm_forward: input " + shape_str(inputs.shape()) +
                         " does not match declared dim " +
                         std::to_string(p.input_dim));
  }
  const std::size_t h = p.hidden, T = inputs.extent(1);
  Tensor b_col = reshape(p.b, {4 * h, 1});
  Tensor h_prev = Tensor::zeros({h, 1});
  Tensor c_prev = Tensor::zeros({h, 1});
  std::vector<Tensor> states(T);
  for (std::size_t step = 0; step < T; ++step) {
    std::size_t t = dir == Direction::Forward ? step : T - 1 - step;
    Tensor x = slice(inputs, 1, t, t + 1);  // {d, 1}
    Tensor z = add(add(matmul(p.U, x), matmul(p.W, h_prev)), b_col);
    Tensor gate_i = sigmoid(slice(z, 0, 0, h));
    Tensor gate_f = sigmoid(slice(z, 0, h, 2 * h));
    Tensor gate_g = udssm::tanh(slice(z, 0, 2 * h, 3 * h));
    Tensor gate_o = sigmoid(slice(z, 0, 3 * h, 4 * h));
    Tensor c = add(mul(gate_f, c_prev), mul(gate_i, gate_g));
    Tensor h_t = mul(gate_o, udssm::tanh(c));
    states[t] = h_t;
    h_prev = h_t;
    c_prev = c;
  }
  return concat(states, 1);  // {h, T}
}

// Column t = [forward h_t ; backward h_t], width l = 2h.
inline Tensor bilstm_forward(const LstmParams& fwd, const LstmParams& bwd,
                             const Tensor& inputs) {
  if (fwd.hidden != bwd.hidden) {
    throw ConfigError("bilstm_forward: direction hidden sizes disagree: " +
                      std::to_string(fwd.hidden) + " vs " +
                      std::to_string(bwd.hidden));
  }
  Tensor f = lstm_forward(fwd, inputs, Direction::Forward);
  Tensor b = lstm_forward(bwd, inputs, Direction::Backward);
  return concat({f, b}, 0);
}

struct AffineParams {
  Tensor W;  // {l, l}
  Tensor b;  // {l}

  static AffineParams init(std::size_t l, Rng& rng) {
    AffineParams p;
    p.W = glorot_uniform({l, l}, l, l, rng).set_requires_grad(true);
    p.b = Tensor::zeros({l}).set_requires_grad(true);
    return p;
  }
};

// W H + b repeated over the N columns.
inline Tensor affine_map(const AffineParams& p, const Tensor& h) {
  if (p.W.rank() != 2 || p.W.extent(0) != p.W.extent(1)) {
    throw DimensionError("affine_map: W must be square, got " +
                         shape_str(p.W.shape()));
  }
  if (h.rank() != 2 || h.extent(0) != p.W.extent(1)) {
    throw DimensionError("affine_map: H " + shape_str(h.shape()) +
                         " does not match W " + shape_str(p.W.shape()));
  }
  return add_bias(matmul(p.W, h), p.b);
}

enum class DropoutMode { Train, Infer };

// Bundles the dropout arguments threaded through the encoders; inference
// needs no generator.
struct DropoutPlan {
  double rate = 0.0;
  DropoutMode mode = DropoutMode::Infer;
  Rng* rng = nullptr;

  static DropoutPlan infer() { return {}; }
  static DropoutPlan train(double rate, Rng& rng) {
    return {rate, DropoutMode::Train, &rng};
  }
};

// Inverted dropout: kept elements are scaled by 1/(1-p) so the expectation
// is unchanged; inference is the identity.
inline Tensor dropout(const Tensor& t, double p, DropoutMode mode, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw ConfigError("dropout: rate must be in [0, 1), got " + std::to_string(p));
  }
  if (mode == DropoutMode::Infer || p == 0.0) return t;
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mask(t.numel());
  for (auto& m : mask) m = rng.uniform01() >= p ? keep_scale : 0.0;
  std::vector<double> out(t.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = t.at(i) * mask[i];
  auto tn = t.node();
  return make_op(t.shape(), std::move(out), {t},
                 [tn, mask = std::move(mask)](detail::Node& self) {
    tn->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      tn->grad[i] += self.grad[i] * mask[i];
  });
}

inline Tensor dropout(const Tensor& t, const DropoutPlan& plan) {
  if (plan.mode == DropoutMode::Infer || plan.rate == 0.0) return t;
  return dropout(t, plan.rate, plan.mode, *plan.rng);
}

}  // namespace udssm

#endif  // UDSSM_LAYERS_HPP
