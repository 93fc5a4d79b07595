#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hiersumm/corpus/types.hpp"
#include "hiersumm/errors.hpp"
#include "hiersumm/random.hpp"

namespace hiersumm::corpus {

/// Interleaves the leading documents of one window into a channel.
///
/// Selection: r ~ U(a, b) documents are taken from the front of the window;
/// document j contributes its first q_j ~ U(m, n) sentences and q_j copies of
/// j to a multiset. Interleaving: |multiset| times, draw j uniformly from the
/// multiset, remove one copy and emit document j's earliest unused sentence.
/// A document's title joins the summaries on its first draw unless an equal
/// title is already present.
///
/// Every selected document must have at least q_j sentences; callers drop
/// documents shorter than n before windowing.
inline CorpusInstance interleave_window(std::span<const SourceDoc> window, const InterleavePreset& preset,
                                        RandomSource& rng) {
  preset.validate();
  if (window.size() < static_cast<std::size_t>(preset.b)) {
    throw InvalidInput("interleave: window of " + std::to_string(window.size()) + " documents, preset needs " +
                       std::to_string(preset.b));
  }

  const auto r = static_cast<std::size_t>(rng.uniform_int(preset.a, preset.b));
  std::vector<std::size_t> remaining(r), next(r, 0);
  for (std::size_t j = 0; j < r; ++j) {
    const auto q = static_cast<std::size_t>(rng.uniform_int(preset.m, preset.n));
    if (window[j].sentences.size() < q) {
      throw InvalidInput("interleave: document " + std::to_string(window[j].id) + " has " +
                         std::to_string(window[j].sentences.size()) + " sentences, drew q=" + std::to_string(q));
    }
    remaining[j] = q;
  }

  CorpusInstance out;
  std::vector<int> label_of_doc(r, -1);
  nlohmann::json source_ids = nlohmann::json::array();
  for (std::size_t j = 0; j < r; ++j) source_ids.push_back(window[j].id);
  out.meta["source_ids"] = std::move(source_ids);

  std::size_t total = 0;
  for (auto q : remaining) total += q;
  for (std::size_t step = 0; step < total; ++step) {
    const std::size_t k = rng.choose_weighted(remaining);
    if (k >= r || remaining[k] == 0) throw InvalidInput("interleave: random source picked an exhausted document");
    remaining[k] -= 1;
    out.posts.push_back(window[k].sentences[next[k]++]);
    if (label_of_doc[k] < 0) {
      const auto& title = window[k].title;
      auto it = std::find(out.summaries.begin(), out.summaries.end(), title);
      if (it == out.summaries.end()) {
        out.summaries.push_back(title);
        it = out.summaries.end() - 1;
      }
      label_of_doc[k] = static_cast<int>(it - out.summaries.begin());
    }
    out.thread_ids.push_back(label_of_doc[k]);
  }
  return out;
}

}  // namespace hiersumm::corpus
