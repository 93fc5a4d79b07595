#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hiersumm/errors.hpp"
#include "hiersumm/model/config.hpp"
#include "hiersumm/numcore.hpp"
#include "hiersumm/random.hpp"
#include "hiersumm/textproc/encode.hpp"

namespace hiersumm::model {

/// Attention maps of one thread step (or of the single flat decode).
/// Token-level maps are flattened row-major over a posts x group grid.
struct ThreadTrace {
  std::vector<double> gamma;      // posts
  std::vector<double> beta;       // posts * group
  std::vector<double> beta_hat;   // posts * group
  double p_stop = 0.0;
  std::vector<std::vector<double>> alpha;      // per word step
  std::vector<std::vector<double>> alpha_hat;  // per word step
  std::vector<int> tokens;                     // generated ids, EOS excluded
};

struct Trace {
  std::size_t posts = 0;
  std::size_t group = 0;
  std::vector<ThreadTrace> threads;
};

/// Encoder outputs copied out of a graph, for inspection.
template <typename T>
struct ChannelSnapshot {
  num::Tensor<T> W;       // (posts * group) x 2d
  num::Tensor<T> P;       // posts x 2d
  num::Tensor<T> A;       // fused keys, same shape as W
  num::Tensor<T> pooled;  // 1 x 2d
  std::size_t posts = 0;
  std::size_t group = 0;
};

struct Generation {
  std::vector<std::vector<int>> summaries;
  bool forced_stop = false;  // thread cap reached before the stop head fired
};

/// Hierarchical encoder / decoder and its ablations. One parameter store,
/// names grouped by component:
///   emb, dec.emb            word embeddings (dec.emb only when unshared)
///   enc.w2w.*, enc.p2p.*    hierarchical encoder BiLSTMs
///   enc.flat.*              flat encoder BiLSTM
///   t2t.*                   thread decoder: init, lstm, stop head, r
///   w2w.*                   word decoder: init, lstm, output projection
///   attn.gamma|beta|alpha   additive attention nets
template <typename T>
class Model {
 public:
  struct Loss {
    num::Value<T> total;
    num::Value<T> nll_sum;
    num::Value<T> stop_bce;
    std::size_t tokens = 0;
  };

  explicit Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    declare();
  }

  Model(ModelConfig cfg, std::uint64_t seed) : Model(std::move(cfg)) {
    Rng rng(derive_seed(seed, 0x1417));
    store_.init_normal(rng, num::kInitStdev);
  }

  const ModelConfig& config() const { return cfg_; }
  num::ParamStore<T>& params() { return store_; }
  const num::ParamStore<T>& params() const { return store_; }
  std::size_t parameter_count() const { return store_.scalar_count(); }

  ChannelSnapshot<T> inspect(const text::EncodedInstance& x) const {
    check_source(x);
    num::Graph<T> g(false);
    auto ch = encode(g, x);
    return {ch.W.to_tensor(), ch.P.to_tensor(), ch.A.to_tensor(), ch.pooled.to_tensor(), ch.n, ch.group};
  }

  /// Teacher-forced pass over the ground-truth threads. `dropout` enables
  /// dropout on thread representations when non-null.
  Loss forward_loss(num::Graph<T>& g, const text::EncodedInstance& x, Rng* dropout = nullptr,
                    Trace* trace = nullptr) const {
    check_instance(x);
    Channel ch = encode(g, x);
    if (trace) *trace = Trace{ch.n, ch.group, {}};
    std::vector<num::Value<T>> ce;
    std::size_t tokens = 0;

    if (!hierarchical_decoder(cfg_.variant)) {
      const auto& target = x.flat_target;
      ThreadTrace* tt = nullptr;
      if (trace) tt = &trace->threads.emplace_back();
      auto stat = static_attention(g, ch, tt);
      std::vector<int> inputs{text::kSos};
      inputs.insert(inputs.end(), target.begin(), target.end() - 1);
      auto run = run_words(g, ch, stat, flat_init(g, ch), inputs, tt);
      ce.push_back(num::cross_entropy_logits(run.logits, target));
      tokens += target.size();
      auto nll = ce.front();
      auto zero = g.zeros(1, 1);
      return {nll, nll, zero, tokens};
    }

    auto state = thread_init(g, ch);
    auto last_word = g.zeros(1, cfg_.d);
    std::vector<num::Value<T>> stops;
    std::vector<T> labels;
    for (std::size_t k = 0; k < x.thread_count(); ++k) {
      ThreadTrace* tt = nullptr;
      if (trace) tt = &trace->threads.emplace_back();
      auto step = thread_step(g, ch, state, last_word, dropout, tt);
      state = step.state;
      stops.push_back(step.stop_logit);
      labels.push_back(static_cast<T>(x.stop_labels[k]));
      if (tt) tt->p_stop = static_cast<double>(num::detail::stable_sigmoid(step.stop_logit.item()));

      const std::size_t len = x.summary_len(k);
      const auto row = x.summaries.row(k);
      std::vector<int> inputs{text::kSos}, targets;
      inputs.insert(inputs.end(), row.begin(), row.begin() + static_cast<std::ptrdiff_t>(len));
      targets.assign(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(len + 1));
      auto run = run_words(g, ch, step.attention, word_init(g, step.s), inputs, tt);
      ce.push_back(num::cross_entropy_logits(run.logits, targets));
      tokens += targets.size();
      last_word = run.final_state.h;
    }
    auto nll = num::add_scalars(std::span<const num::Value<T>>(ce));
    auto bce = num::bce_with_logits(num::concat_rows(stops), labels);
    std::vector<num::Value<T>> parts{nll, num::scale(bce, static_cast<T>(cfg_.lambda))};
    return {num::add_scalars(std::span<const num::Value<T>>(parts)), nll, bce, tokens};
  }

  /// Greedy decoding. Hierarchical decoders run thread steps until the stop
  /// probability exceeds 0.5 (that thread still gets its summary) or the
  /// thread cap is reached; each summary ends at EOS or after q words.
  Generation generate(const text::EncodedInstance& x, Trace* trace = nullptr) const {
    check_source(x);
    num::Graph<T> g(false);
    Channel ch = encode(g, x);
    if (trace) *trace = Trace{ch.n, ch.group, {}};
    Generation out;

    if (!hierarchical_decoder(cfg_.variant)) {
      ThreadTrace* tt = nullptr;
      if (trace) tt = &trace->threads.emplace_back();
      auto stat = static_attention(g, ch, tt);
      const std::size_t max_len = cfg_.thread_cap * (cfg_.limits.q + 1);
      auto ids = greedy_words(g, ch, stat, flat_init(g, ch), max_len, tt);
      if (tt) tt->tokens = ids;
      out.summaries = text::split_at_sep(ids);
      if (out.summaries.size() > cfg_.thread_cap) {
        out.summaries.resize(cfg_.thread_cap);
        out.forced_stop = true;
      }
      return out;
    }

    auto state = thread_init(g, ch);
    auto last_word = g.zeros(1, cfg_.d);
    for (std::size_t k = 0; k < cfg_.thread_cap; ++k) {
      ThreadTrace* tt = nullptr;
      if (trace) tt = &trace->threads.emplace_back();
      auto step = thread_step(g, ch, state, last_word, nullptr, tt);
      state = step.state;
      const double p_stop = static_cast<double>(num::detail::stable_sigmoid(step.stop_logit.item()));
      if (tt) tt->p_stop = p_stop;
      num::LstmState<T> final_state;
      auto ids = greedy_words(g, ch, step.attention, word_init(g, step.s), cfg_.limits.q + 1, tt, &final_state);
      if (tt) tt->tokens = ids;
      out.summaries.push_back(std::move(ids));
      last_word = final_state.h;
      if (p_stop > 0.5) return out;
    }
    out.forced_stop = true;
    return out;
  }

 private:
  struct Channel {
    num::Value<T> W;       // N x 2d token representations, N = n * group
    num::Value<T> P;       // n x 2d post representations
    num::Value<T> A;       // fused keys a = W + P per post (W for flat sources)
    num::Value<T> pooled;  // 1 x 2d mean over real posts
    std::size_t n = 0;
    std::size_t group = 0;
    std::vector<bool> token_mask;
    std::vector<bool> post_mask;
    std::optional<num::Value<T>> key_gamma, key_beta;
    num::Value<T> key_alpha;
  };

  struct Attention {
    std::optional<num::Value<T>> gamma, beta, beta_hat;  // beta_hat empty: alpha is used as is
  };

  struct ThreadStep {
    num::LstmState<T> state;
    Attention attention;
    num::Value<T> stop_logit;
    num::Value<T> s;
  };

  struct WordRun {
    num::Value<T> logits;
    num::LstmState<T> final_state;
  };

  struct WordStep {
    num::LstmState<T> state;
    num::Value<T> features;  // [h ; context]
  };

  void declare() {
    const std::size_t d = cfg_.d, v = cfg_.vocab_size;
    using num::Activation;
    store_.add("emb", v, d);
    if (!cfg_.share_embeddings) store_.add("dec.emb", v, d);
    if (hierarchical_encoder(cfg_.variant)) {
      enc_a_ = num::LstmParams::declare(store_, "enc.w2w.fwd", d, d);
      enc_b_ = num::LstmParams::declare(store_, "enc.w2w.bwd", d, d);
      p2p_a_ = num::LstmParams::declare(store_, "enc.p2p.fwd", 2 * d, d);
      p2p_b_ = num::LstmParams::declare(store_, "enc.p2p.bwd", 2 * d, d);
    } else {
      enc_a_ = num::LstmParams::declare(store_, "enc.flat.fwd", d, d);
      enc_b_ = num::LstmParams::declare(store_, "enc.flat.bwd", d, d);
    }
    const bool hier_dec = hierarchical_decoder(cfg_.variant);
    const bool static_query = cfg_.variant == Variant::kHier2Seq && (cfg_.gamma_enabled || cfg_.beta_enabled);
    if (hier_dec || static_query) {
      t2t_init_h_ = num::FeedForward::declare(store_, "t2t.init_h", {2 * d, d}, {Activation::kTanh});
    }
    if (hier_dec) {
      t2t_init_c_ = num::FeedForward::declare(store_, "t2t.init_c", {2 * d, d}, {Activation::kTanh});
      t2t_ = num::LstmParams::declare(store_, "t2t.lstm", 3 * d, d);
      stop_ = num::FeedForward::declare(store_, "t2t.stop", {d, 1}, {Activation::kIdentity});
      r_ = num::FeedForward::declare(store_, "t2t.r", {4 * d, d, d}, {Activation::kTanh, Activation::kTanh});
    }
    const std::size_t init_in = hier_dec ? d : 2 * d;
    w2w_init_h_ = num::FeedForward::declare(store_, "w2w.init_h", {init_in, d}, {Activation::kIdentity});
    w2w_init_c_ = num::FeedForward::declare(store_, "w2w.init_c", {init_in, d}, {Activation::kIdentity});
    w2w_ = num::LstmParams::declare(store_, "w2w.lstm", 3 * d, d);
    out_ = num::FeedForward::declare(store_, "w2w.out", {3 * d, v}, {Activation::kIdentity});
    if (cfg_.gamma_enabled) gamma_ = num::AdditiveScorer::declare(store_, "attn.gamma", d, 2 * d, d, true);
    if (cfg_.beta_enabled) beta_ = num::AdditiveScorer::declare(store_, "attn.beta", d, 2 * d, d, true);
    alpha_ = num::AdditiveScorer::declare(store_, "attn.alpha", d, 2 * d, d, false);
  }

  void check_source(const text::EncodedInstance& x) const {
    auto check_ids = [&](std::span<const int> ids, const char* what) {
      for (int id : ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= cfg_.vocab_size) {
          throw InvalidInput(std::string(what) + " id " + std::to_string(id) + " outside vocab of " +
                             std::to_string(cfg_.vocab_size));
        }
      }
    };
    check_ids(x.posts.ids, "post");
    check_ids(x.flat_source, "source");
  }

  void check_instance(const text::EncodedInstance& x) const {
    check_source(x);
    if (x.thread_count() == 0) throw InvalidInput("instance has no summaries");
    for (int id : x.summaries.ids) {
      if (id < 0 || static_cast<std::size_t>(id) >= cfg_.vocab_size) {
        throw InvalidInput("summary id " + std::to_string(id) + " outside vocab");
      }
    }
    if (hierarchical_decoder(cfg_.variant) && x.thread_count() > cfg_.thread_cap) {
      throw InvalidInput(std::to_string(x.thread_count()) + " threads exceed the thread cap of " +
                         std::to_string(cfg_.thread_cap));
    }
  }

  num::Value<T> embed(num::Graph<T>& g, std::vector<int> ids, bool decoder) const {
    const char* table = decoder && !cfg_.share_embeddings ? "dec.emb" : "emb";
    return num::gather_rows(g.param(store_, table), std::move(ids));
  }

  Channel encode(num::Graph<T>& g, const text::EncodedInstance& x) const {
    Channel ch;
    if (hierarchical_encoder(cfg_.variant)) {
      const std::size_t n = x.post_count();
      std::size_t width = 0;
      for (auto len : x.post_len) width = std::max(width, len);
      if (n == 0 || width == 0) throw InvalidInput("encode: channel has no words");
      // Columns past the longest post are all PAD and skipped.
      std::vector<num::Value<T>> xs;
      std::vector<std::vector<bool>> masks(width, std::vector<bool>(n));
      for (std::size_t t = 0; t < width; ++t) {
        std::vector<int> col(n);
        for (std::size_t i = 0; i < n; ++i) {
          col[i] = x.posts.at(i, t);
          masks[t][i] = t < x.post_len[i];
        }
        xs.push_back(embed(g, std::move(col), false));
      }
      auto outs = num::bilstm_encode_batch(store_, enc_a_, enc_b_, xs, masks);
      ch.W = num::interleave_rows(std::span<const num::Value<T>>(outs));
      ch.n = n;
      ch.group = width;
      ch.token_mask.resize(n * width);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < width; ++t) ch.token_mask[i * width + t] = t < x.post_len[i];
      ch.post_mask.resize(n);
      for (std::size_t i = 0; i < n; ++i) ch.post_mask[i] = x.post_len[i] > 0;

      auto post_in = num::mean_rows_grouped(ch.W, width, ch.token_mask);
      std::vector<num::Value<T>> seq;
      for (std::size_t i = 0; i < n; ++i) seq.push_back(num::slice_rows(post_in, i, 1));
      auto post_out = num::bilstm_encode(store_, p2p_a_, p2p_b_, seq, ch.post_mask);
      ch.P = num::concat_rows(post_out);
      ch.pooled = num::mean_rows_masked(ch.P, ch.post_mask);
    } else {
      const auto& ids = x.flat_source;
      if (ids.empty()) throw InvalidInput("encode: empty flat source");
      std::vector<num::Value<T>> xs;
      for (int id : ids) xs.push_back(embed(g, {id}, false));
      std::vector<bool> all(ids.size(), true);
      auto outs = num::bilstm_encode(store_, enc_a_, enc_b_, xs, all);
      ch.W = num::concat_rows(outs);
      ch.P = ch.W;
      ch.n = ids.size();
      ch.group = 1;
      ch.token_mask = all;
      ch.post_mask = all;
      ch.pooled = num::mean_rows_masked(ch.W, all);
    }
    ch.A = hierarchical_encoder(cfg_.variant) ? num::add(ch.W, num::repeat_rows(ch.P, ch.group)) : ch.W;
    if (cfg_.gamma_enabled) ch.key_gamma = gamma_.project(store_, ch.P);
    if (cfg_.beta_enabled) ch.key_beta = beta_.project(store_, ch.A);
    ch.key_alpha = alpha_.project(store_, ch.A);
    return ch;
  }

  static std::vector<double> to_doubles(num::Value<T> v) {
    auto d = v.data();
    return {d.begin(), d.end()};
  }

  num::Value<T> mask_constant(num::Graph<T>& g, const std::vector<bool>& mask) const {
    std::vector<T> ones(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) ones[i] = mask[i] ? T(1) : T(0);
    return g.constant(mask.size(), 1, std::move(ones));
  }

  /// gamma, beta and beta_hat for one query state.
  Attention post_phrase(num::Graph<T>& g, const Channel& ch, num::Value<T> query, ThreadTrace* tt) const {
    Attention at;
    if (!cfg_.gamma_enabled && !cfg_.beta_enabled) {
      if (tt) {
        auto pm = mask_constant(g, ch.post_mask), tm = mask_constant(g, ch.token_mask);
        tt->gamma = to_doubles(pm);
        tt->beta = to_doubles(tm);
        tt->beta_hat = tt->beta;
      }
      return at;
    }
    num::Value<T> gamma, beta;
    if (cfg_.gamma_enabled) {
      auto scores = gamma_.score(store_, query, *ch.key_gamma);
      gamma = cfg_.gamma_mode == GammaMode::kSoftmax ? num::softmax_masked(scores, ch.post_mask)
                                                     : num::mask_zero(num::sigmoid(scores), ch.post_mask);
    } else {
      gamma = mask_constant(g, ch.post_mask);
    }
    if (cfg_.beta_enabled) {
      beta = num::mask_zero(num::sigmoid(beta_.score(store_, query, *ch.key_beta)), ch.token_mask);
    } else {
      beta = mask_constant(g, ch.token_mask);
    }
    at.gamma = gamma;
    at.beta = beta;
    at.beta_hat = num::mul(beta, num::repeat_rows(gamma, ch.group));
    if (tt) {
      tt->gamma = to_doubles(gamma);
      tt->beta = to_doubles(beta);
      tt->beta_hat = to_doubles(*at.beta_hat);
    }
    return at;
  }

  /// Flat decoders: hier2seq rescales alpha by a beta_hat computed once from
  /// the thread decoder's initial state; seq2seq uses alpha alone.
  Attention static_attention(num::Graph<T>& g, const Channel& ch, ThreadTrace* tt) const {
    if (cfg_.variant == Variant::kHier2Seq && (cfg_.gamma_enabled || cfg_.beta_enabled)) {
      auto h0 = num::feedforward(store_, t2t_init_h_, ch.pooled);
      return post_phrase(g, ch, h0, tt);
    }
    return post_phrase(g, ch, num::Value<T>{}, tt);
  }

  num::LstmState<T> thread_init(num::Graph<T>&, const Channel& ch) const {
    return {num::feedforward(store_, t2t_init_h_, ch.pooled), num::feedforward(store_, t2t_init_c_, ch.pooled)};
  }

  num::LstmState<T> word_init(num::Graph<T>&, num::Value<T> s) const {
    return {num::feedforward(store_, w2w_init_h_, s), num::feedforward(store_, w2w_init_c_, s)};
  }

  num::LstmState<T> flat_init(num::Graph<T>& g, const Channel& ch) const { return word_init(g, ch.pooled); }

  ThreadStep thread_step(num::Graph<T>& g, const Channel& ch, const num::LstmState<T>& prev,
                         num::Value<T> last_word, Rng* dropout, ThreadTrace* tt) const {
    ThreadStep st;
    st.attention = post_phrase(g, ch, prev.h, tt);
    auto weights = st.attention.beta_hat ? *st.attention.beta_hat : mask_constant(g, ch.token_mask);
    auto weighted = num::weighted_sum_rows(weights, ch.W);
    st.state = num::lstm_step(store_, t2t_, num::concat_cols({weighted, last_word}), prev);
    st.stop_logit = num::feedforward(store_, stop_, st.state.h);
    st.s = num::feedforward(store_, r_, num::concat_cols({st.state.h, last_word, weighted}));
    if (dropout != nullptr && cfg_.dropout > 0.0) {
      const T keep = static_cast<T>(1.0 - cfg_.dropout);
      std::vector<T> f(st.s.size());
      for (auto& x : f) x = dropout->bernoulli(1.0 - cfg_.dropout) ? T(1) / keep : T(0);
      st.s = num::mul_const(st.s, std::move(f));
    }
    return st;
  }

  WordStep word_step(num::Graph<T>& g, const Channel& ch, const Attention& at, const num::LstmState<T>& prev,
                     int prev_id, ThreadTrace* tt) const {
    auto alpha = num::softmax_masked(alpha_.score(store_, prev.h, ch.key_alpha), ch.token_mask);
    auto alpha_hat = at.beta_hat ? num::mul(*at.beta_hat, alpha) : alpha;
    if (tt) {
      tt->alpha.push_back(to_doubles(alpha));
      tt->alpha_hat.push_back(to_doubles(alpha_hat));
    }
    auto context = num::weighted_sum_rows(alpha_hat, ch.W);
    auto next = num::lstm_step(store_, w2w_, num::concat_cols({embed(g, {prev_id}, true), context}), prev);
    return {next, num::concat_cols({next.h, context})};
  }

  WordRun run_words(num::Graph<T>& g, const Channel& ch, const Attention& at, num::LstmState<T> state,
                    const std::vector<int>& inputs, ThreadTrace* tt) const {
    std::vector<num::Value<T>> feats;
    feats.reserve(inputs.size());
    for (int id : inputs) {
      auto ws = word_step(g, ch, at, state, id, tt);
      state = ws.state;
      feats.push_back(ws.features);
    }
    return {num::feedforward(store_, out_, num::concat_rows(feats)), state};
  }

  std::vector<int> greedy_words(num::Graph<T>& g, const Channel& ch, const Attention& at, num::LstmState<T> state,
                                std::size_t max_steps, ThreadTrace* tt,
                                num::LstmState<T>* final_state = nullptr) const {
    std::vector<int> ids;
    int prev = text::kSos;
    for (std::size_t l = 0; l < max_steps; ++l) {
      auto ws = word_step(g, ch, at, state, prev, tt);
      state = ws.state;
      auto logits = num::feedforward(store_, out_, ws.features).data();
      // First maximum wins, i.e. the lowest id on ties.
      const int best = static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
      if (best == text::kEos) break;
      ids.push_back(best);
      prev = best;
    }
    if (final_state) *final_state = state;
    return ids;
  }

  ModelConfig cfg_;
  num::ParamStore<T> store_;
  num::LstmParams enc_a_, enc_b_, p2p_a_, p2p_b_, t2t_, w2w_;
  num::FeedForward t2t_init_h_, t2t_init_c_, stop_, r_, w2w_init_h_, w2w_init_c_, out_;
  num::AdditiveScorer gamma_, beta_, alpha_;
};

}  // namespace hiersumm::model
