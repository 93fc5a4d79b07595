#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hiersumm/corpus/types.hpp"
#include "hiersumm/errors.hpp"
#include "hiersumm/textproc/tokenize.hpp"
#include "hiersumm/textproc/vocab.hpp"

namespace hiersumm::text {

struct EncodeLimits {
  std::size_t p = 20;            // words per post
  std::size_t q = 15;            // words per summary, before EOS
  std::size_t max_posts = 0;     // 0 = keep all
  std::size_t max_threads = 0;   // 0 = no cap
  std::size_t flat = 300;        // flattened source, SEP included
};

/// Row-major int matrix.
struct IdGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<int> ids;

  int at(std::size_t r, std::size_t c) const { return ids[r * cols + c]; }
  std::span<const int> row(std::size_t r) const { return {ids.data() + r * cols, cols}; }
  friend bool operator==(const IdGrid&, const IdGrid&) = default;
};

struct EncodedInstance {
  IdGrid posts;                        // n x p, right-padded with PAD
  std::vector<std::size_t> post_len;   // real words per post
  std::vector<std::uint8_t> post_mask; // 1 when the post has at least one word
  IdGrid summaries;                    // m x (q+1): words, EOS, PAD
  std::vector<int> stop_labels;        // 0 ... 0 1
  std::vector<int> flat_source;        // posts joined by SEP, at most `flat` ids
  std::vector<int> flat_target;        // summaries joined by SEP, then EOS

  std::size_t post_count() const { return posts.rows; }
  std::size_t thread_count() const { return summaries.rows; }
  bool word_mask(std::size_t i, std::size_t j) const { return j < post_len[i]; }
  /// Position of EOS in summary row k.
  std::size_t summary_len(std::size_t k) const {
    auto r = summaries.row(k);
    return static_cast<std::size_t>(std::find(r.begin(), r.end(), kEos) - r.begin());
  }
  friend bool operator==(const EncodedInstance&, const EncodedInstance&) = default;
};

inline std::vector<int> encode_tokens(const std::vector<std::string>& tokens, const Vocab& v) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(v.id(t));
  return ids;
}

inline EncodedInstance encode_instance(const corpus::CorpusInstance& x, const Vocab& v, const EncodeLimits& lim = {}) {
  if (x.posts.empty()) throw InvalidInput("encode: instance has no posts");
  if (x.summaries.empty()) throw InvalidInput("encode: instance has no summaries");
  if (lim.p == 0 || lim.q == 0) throw ConfigError("encode: p and q must be positive");
  if (lim.max_threads != 0 && x.summaries.size() > lim.max_threads) {
    throw InvalidInput("encode: " + std::to_string(x.summaries.size()) + " threads exceed the cap of " +
                       std::to_string(lim.max_threads));
  }
  EncodedInstance e;
  const std::size_t n = lim.max_posts ? std::min(lim.max_posts, x.posts.size()) : x.posts.size();
  e.posts = {n, lim.p, std::vector<int>(n * lim.p, kPad)};
  for (std::size_t i = 0; i < x.posts.size(); ++i) {
    const auto ids = encode_tokens(tokenize(x.posts[i]), v);
    if (i < n) {
      const std::size_t len = std::min(ids.size(), lim.p);
      std::copy_n(ids.begin(), len, e.posts.ids.begin() + static_cast<std::ptrdiff_t>(i * lim.p));
      e.post_len.push_back(len);
      e.post_mask.push_back(len > 0 ? 1 : 0);
    }
    if (i > 0 && e.flat_source.size() < lim.flat) e.flat_source.push_back(kSep);
    for (int id : ids) {
      if (e.flat_source.size() >= lim.flat) break;
      e.flat_source.push_back(id);
    }
  }

  const std::size_t m = x.summaries.size();
  const std::size_t width = lim.q + 1;
  e.summaries = {m, width, std::vector<int>(m * width, kPad)};
  for (std::size_t k = 0; k < m; ++k) {
    auto ids = encode_tokens(tokenize(x.summaries[k]), v);
    ids.resize(std::min(ids.size(), lim.q));
    std::copy(ids.begin(), ids.end(), e.summaries.ids.begin() + static_cast<std::ptrdiff_t>(k * width));
    e.summaries.ids[k * width + ids.size()] = kEos;
    if (k > 0) e.flat_target.push_back(kSep);
    e.flat_target.insert(e.flat_target.end(), ids.begin(), ids.end());
    e.stop_labels.push_back(k + 1 == m ? 1 : 0);
  }
  e.flat_target.push_back(kEos);
  return e;
}

/// Renders ids up to the first EOS, dropping PAD and SOS.
inline std::string decode_ids(std::span<const int> ids, const Vocab& v) {
  std::vector<std::string> words;
  for (int id : ids) {
    const auto& tok = v.token(id);
    if (id == kEos) break;
    if (id == kPad || id == kSos) continue;
    words.push_back(tok);
  }
  return join_tokens(words);
}

/// Splits a flat decoder output at SEP; stops at the first EOS.
inline std::vector<std::vector<int>> split_at_sep(std::span<const int> ids) {
  std::vector<std::vector<int>> out(1);
  for (int id : ids) {
    if (id == kEos) break;
    if (id == kSep) {
      out.emplace_back();
    } else {
      out.back().push_back(id);
    }
  }
  return out;
}

}  // namespace hiersumm::text
