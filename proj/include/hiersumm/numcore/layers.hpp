#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hiersumm/errors.hpp"
#include "hiersumm/numcore/graph.hpp"
#include "hiersumm/numcore/ops.hpp"
#include "hiersumm/numcore/params.hpp"

namespace hiersumm::num {

/// Standard 4-gate LSTM, no peepholes. One fused weight of shape
/// (input_dim + hidden_dim) x 4*hidden_dim with gate blocks ordered
/// input, forget, output, candidate; bias 1 x 4*hidden_dim.
struct LstmParams {
  std::string prefix;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;

  std::string weight() const { return prefix + ".W"; }
  std::string bias() const { return prefix + ".b"; }

  template <typename T>
  static LstmParams declare(ParamStore<T>& store, std::string prefix, std::size_t input_dim,
                            std::size_t hidden_dim) {
    LstmParams p{std::move(prefix), input_dim, hidden_dim};
    store.add(p.weight(), input_dim + hidden_dim, 4 * hidden_dim);
    store.add(p.bias(), 1, 4 * hidden_dim);
    return p;
  }
};

template <typename T>
struct LstmState {
  Value<T> h;
  Value<T> c;
};

template <typename T>
LstmState<T> zero_state(Graph<T>& g, std::size_t batch, std::size_t hidden) {
  return {g.zeros(batch, hidden), g.zeros(batch, hidden)};
}

/// One LSTM step over a batch of rows: x is (B x input_dim), state (B x d).
template <typename T>
LstmState<T> lstm_step(const ParamStore<T>& store, const LstmParams& p, Value<T> x,
                       const LstmState<T>& prev) {
  const std::size_t d = p.hidden_dim;
  if (x.cols() != p.input_dim) {
    throw DimensionError(p.prefix + ": input x has width " + std::to_string(x.cols()) +
                         ", expected " + std::to_string(p.input_dim));
  }
  if (prev.h.cols() != d || prev.h.rows() != x.rows()) {
    throw DimensionError(p.prefix + ": h_prev is " + shape_str(prev.h.rows(), prev.h.cols()) +
                         ", expected " + shape_str(x.rows(), d));
  }
  if (prev.c.cols() != d || prev.c.rows() != x.rows()) {
    throw DimensionError(p.prefix + ": c_prev is " + shape_str(prev.c.rows(), prev.c.cols()) +
                         ", expected " + shape_str(x.rows(), d));
  }
  Graph<T>& g = x.graph();
  auto z = linear(concat_cols({x, prev.h}), g.param(store, p.weight()), g.param(store, p.bias()));
  auto in_gate = sigmoid(slice_cols(z, 0, d));
  auto forget = sigmoid(slice_cols(z, d, d));
  auto out_gate = sigmoid(slice_cols(z, 2 * d, d));
  auto cand = tanh(slice_cols(z, 3 * d, d));
  auto c = add(mul(forget, prev.c), mul(in_gate, cand));
  auto h = mul(out_gate, tanh(c));
  return {h, c};
}

/// LSTM step where rows with keep[b] == false hold their previous state.
template <typename T>
LstmState<T> lstm_step_masked(const ParamStore<T>& store, const LstmParams& p, Value<T> x,
                              const LstmState<T>& prev, const std::vector<bool>& keep) {
  bool any = false, all = true;
  for (bool k : keep) {
    any = any || k;
    all = all && k;
  }
  if (!any) return prev;
  auto next = lstm_step(store, p, x, prev);
  if (all) return next;
  return {blend_rows(next.h, prev.h, keep), blend_rows(next.c, prev.c, keep)};
}

/// Bidirectional encoding of a batch of B sequences, time-major:
/// xs[t] is (B x input_dim) and masks[t][b] says whether sequence b has a real
/// token at t. Output t is (B x 2d) = [forward h ; backward h], zero on
/// masked positions. Masked steps do not advance either direction's state.
template <typename T>
std::vector<Value<T>> bilstm_encode_batch(const ParamStore<T>& store, const LstmParams& fwd,
                                          const LstmParams& bwd, const std::vector<Value<T>>& xs,
                                          const std::vector<std::vector<bool>>& masks) {
  if (xs.empty()) throw InvalidInput("bilstm_encode: empty sequence");
  if (xs.size() != masks.size()) {
    throw InvalidInput("bilstm_encode: " + std::to_string(xs.size()) + " inputs but " +
                       std::to_string(masks.size()) + " mask entries");
  }
  if (fwd.hidden_dim != bwd.hidden_dim) {
    throw DimensionError("bilstm_encode: forward/backward hidden sizes differ");
  }
  Graph<T>& g = xs[0].graph();
  const std::size_t steps = xs.size(), batch = xs[0].rows(), d = fwd.hidden_dim;
  for (std::size_t t = 0; t < steps; ++t) {
    if (masks[t].size() != batch) {
      throw DimensionError("bilstm_encode: mask at step " + std::to_string(t) + " has " +
                           std::to_string(masks[t].size()) + " rows, expected " + std::to_string(batch));
    }
  }
  std::vector<Value<T>> fwd_h(steps), bwd_h(steps);
  auto state = zero_state(g, batch, d);
  for (std::size_t t = 0; t < steps; ++t) {
    state = lstm_step_masked(store, fwd, xs[t], state, masks[t]);
    fwd_h[t] = state.h;
  }
  state = zero_state(g, batch, d);
  for (std::size_t t = steps; t-- > 0;) {
    state = lstm_step_masked(store, bwd, xs[t], state, masks[t]);
    bwd_h[t] = state.h;
  }
  std::vector<Value<T>> out(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    bool any = false;
    for (bool m : masks[t]) any = any || m;
    if (!any) {
      out[t] = g.zeros(batch, 2 * d);
      continue;
    }
    std::vector<bool> flat(batch * 2 * d);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t j = 0; j < 2 * d; ++j) flat[b * 2 * d + j] = masks[t][b];
    out[t] = mask_zero(concat_cols({fwd_h[t], bwd_h[t]}), flat);
  }
  return out;
}

/// Single-sequence form: xs[t] is (1 x input_dim), output[t] is (1 x 2d).
template <typename T>
std::vector<Value<T>> bilstm_encode(const ParamStore<T>& store, const LstmParams& fwd,
                                    const LstmParams& bwd, const std::vector<Value<T>>& xs,
                                    const std::vector<bool>& mask) {
  if (xs.empty()) throw InvalidInput("bilstm_encode: empty sequence");
  if (xs.size() != mask.size()) {
    throw InvalidInput("bilstm_encode: " + std::to_string(xs.size()) + " inputs but " +
                       std::to_string(mask.size()) + " mask entries");
  }
  std::vector<std::vector<bool>> masks;
  masks.reserve(mask.size());
  for (bool m : mask) masks.push_back({m});
  return bilstm_encode_batch(store, fwd, bwd, xs, masks);
}

enum class Activation { kIdentity, kTanh, kSigmoid };

struct FeedForwardLayer {
  std::string weight;
  std::string bias;
  Activation act = Activation::kIdentity;
};

/// Stack of dense layers y = act(x W + b).
struct FeedForward {
  std::vector<FeedForwardLayer> layers;

  /// dims = {in, h1, ..., out}; acts has dims.size() - 1 entries.
  template <typename T>
  static FeedForward declare(ParamStore<T>& store, const std::string& prefix,
                             const std::vector<std::size_t>& dims, const std::vector<Activation>& acts) {
    if (dims.size() < 2 || acts.size() + 1 != dims.size()) {
      throw ConfigError(prefix + ": feedforward needs dims.size() == acts.size() + 1 >= 2");
    }
    FeedForward ff;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      FeedForwardLayer layer{prefix + ".W" + std::to_string(l), prefix + ".b" + std::to_string(l), acts[l]};
      store.add(layer.weight, dims[l], dims[l + 1]);
      store.add(layer.bias, 1, dims[l + 1]);
      ff.layers.push_back(std::move(layer));
    }
    return ff;
  }
};

template <typename T>
Value<T> apply(Activation act, Value<T> x) {
  switch (act) {
    case Activation::kTanh:
      return tanh(x);
    case Activation::kSigmoid:
      return sigmoid(x);
    case Activation::kIdentity:
      break;
  }
  return x;
}

template <typename T>
Value<T> feedforward(const ParamStore<T>& store, const FeedForward& ff, Value<T> x) {
  Graph<T>& g = x.graph();
  for (const auto& layer : ff.layers) {
    x = apply(layer.act, linear(x, g.param(store, layer.weight), g.param(store, layer.bias)));
  }
  return x;
}

/// Arithmetic mean of the unmasked elements of a sequence of (1 x k) values.
template <typename T>
Value<T> mean_pool(const std::vector<Value<T>>& xs, const std::vector<bool>& mask) {
  if (xs.empty()) throw InvalidInput("mean_pool: empty sequence");
  return mean_rows_masked(concat_rows(std::span<const Value<T>>(xs)), mask);
}

/// Additive (Bahdanau) scorer: score(q, k_i) = v . tanh(q Uq + k_i Uk + b) [+ c].
/// Keys are projected once per source with project(), then scored against
/// any number of queries.
struct AdditiveScorer {
  std::string prefix;
  bool output_bias = true;

  template <typename T>
  static AdditiveScorer declare(ParamStore<T>& store, std::string prefix, std::size_t query_dim,
                                std::size_t key_dim, std::size_t hidden, bool output_bias) {
    AdditiveScorer s{std::move(prefix), output_bias};
    store.add(s.prefix + ".Uq", query_dim, hidden);
    store.add(s.prefix + ".Uk", key_dim, hidden);
    store.add(s.prefix + ".b", 1, hidden);
    store.add(s.prefix + ".v", hidden, 1);
    if (output_bias) store.add(s.prefix + ".c", 1, 1);
    return s;
  }

  /// keys (N x key_dim) -> (N x hidden)
  template <typename T>
  Value<T> project(const ParamStore<T>& store, Value<T> keys) const {
    Graph<T>& g = keys.graph();
    return linear(keys, g.param(store, prefix + ".Uk"), g.param(store, prefix + ".b"));
  }

  /// query (1 x query_dim), projected keys (N x hidden) -> scores (N x 1)
  template <typename T>
  Value<T> score(const ParamStore<T>& store, Value<T> query, Value<T> projected_keys) const {
    Graph<T>& g = query.graph();
    auto hidden = tanh(add_rowvec(projected_keys, matmul(query, g.param(store, prefix + ".Uq"))));
    if (output_bias) return linear(hidden, g.param(store, prefix + ".v"), g.param(store, prefix + ".c"));
    return matmul(hidden, g.param(store, prefix + ".v"));
  }
};

}  // namespace hiersumm::num
