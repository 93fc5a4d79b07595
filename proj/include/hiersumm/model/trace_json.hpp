#pragma once

#include <algorithm>
#include <cstddef>
#include <nlohmann/json.hpp>
#include <numeric>
#include <vector>

#include "hiersumm/model/model.hpp"
#include "hiersumm/textproc/encode.hpp"
#include "hiersumm/textproc/vocab.hpp"

namespace hiersumm::model {

/// Indices of the k largest entries, largest first; ties keep the lower index.
inline std::vector<std::size_t> top_k(const std::vector<double>& v, std::size_t k) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

/// Per-thread diagnostic: full gamma, the most attended posts, the top
/// beta_hat word positions and the generated tokens.
inline nlohmann::json trace_to_json(const Trace& t, const text::Vocab& vocab, std::size_t top_posts = 2,
                                    std::size_t top_words = 10) {
  nlohmann::json threads = nlohmann::json::array();
  for (std::size_t k = 0; k < t.threads.size(); ++k) {
    const auto& th = t.threads[k];
    nlohmann::json words = nlohmann::json::array();
    for (auto pos : top_k(th.beta_hat, top_words)) {
      words.push_back({{"post", pos / t.group}, {"word", pos % t.group}, {"weight", th.beta_hat[pos]}});
    }
    threads.push_back({{"thread", k + 1},
                       {"p_stop", th.p_stop},
                       {"gamma", th.gamma},
                       {"top_posts", top_k(th.gamma, top_posts)},
                       {"beta_hat_top", std::move(words)},
                       {"tokens", th.tokens},
                       {"text", text::decode_ids(th.tokens, vocab)}});
  }
  return {{"posts", t.posts}, {"group", t.group}, {"threads", std::move(threads)}};
}

}  // namespace hiersumm::model
