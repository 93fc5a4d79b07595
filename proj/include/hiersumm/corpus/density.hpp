#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

#include "hiersumm/corpus/types.hpp"

namespace hiersumm::corpus {

/// End index of the smallest contiguous post window holding more than half
/// of a thread's posts. `positions` are the thread's post indices, ascending.
/// Among equally small windows the earliest wins.
inline std::size_t densest_window_end(const std::vector<std::size_t>& positions) {
  const std::size_t need = positions.size() / 2 + 1;
  std::size_t best_len = static_cast<std::size_t>(-1), best_end = 0;
  for (std::size_t i = 0; i + need <= positions.size(); ++i) {
    const std::size_t len = positions[i + need - 1] - positions[i];
    if (len < best_len) {
      best_len = len;
      best_end = positions[i + need - 1];
    }
  }
  return best_end;
}

/// Reorders summaries by the end of each thread's densest window; ties keep
/// the incoming order. Posts are untouched; thread ids are relabelled so they
/// keep indexing `summaries`.
inline CorpusInstance density_order(const CorpusInstance& in) {
  in.validate();
  const std::size_t threads = in.summaries.size();
  std::vector<std::vector<std::size_t>> positions(threads);
  for (std::size_t i = 0; i < in.thread_ids.size(); ++i) {
    positions[static_cast<std::size_t>(in.thread_ids[i])].push_back(i);
  }
  std::vector<std::size_t> end(threads);
  for (std::size_t k = 0; k < threads; ++k) end[k] = densest_window_end(positions[k]);

  std::vector<std::size_t> order(threads);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return end[x] < end[y]; });

  std::vector<int> relabel(threads);
  CorpusInstance out;
  out.posts = in.posts;
  out.meta = in.meta;
  for (std::size_t rank = 0; rank < threads; ++rank) {
    relabel[order[rank]] = static_cast<int>(rank);
    out.summaries.push_back(in.summaries[order[rank]]);
  }
  out.thread_ids.reserve(in.thread_ids.size());
  for (int t : in.thread_ids) out.thread_ids.push_back(relabel[static_cast<std::size_t>(t)]);
  return out;
}

}  // namespace hiersumm::corpus
