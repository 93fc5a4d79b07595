#pragma once

// Slow reference scorers used to cross-check the ROUGE implementation.

#include <algorithm>
#include <cstddef>
#include <vector>

namespace oracle {

/// Clipped n-gram overlap counted pairwise: each reference n-gram occurrence
/// can be claimed by at most one candidate occurrence.
inline std::size_t ngram_overlap(const std::vector<int>& cand, const std::vector<int>& ref, std::size_t n) {
  if (cand.size() < n || ref.size() < n) return 0;
  std::vector<bool> used(ref.size() - n + 1, false);
  std::size_t hits = 0;
  for (std::size_t i = 0; i + n <= cand.size(); ++i) {
    for (std::size_t j = 0; j + n <= ref.size(); ++j) {
      if (used[j]) continue;
      if (std::equal(cand.begin() + static_cast<std::ptrdiff_t>(i), cand.begin() + static_cast<std::ptrdiff_t>(i + n),
                     ref.begin() + static_cast<std::ptrdiff_t>(j))) {
        used[j] = true;
        ++hits;
        break;
      }
    }
  }
  return hits;
}

inline bool is_subsequence(const std::vector<int>& s, const std::vector<int>& of) {
  std::size_t k = 0;
  for (int t : of) {
    if (k < s.size() && s[k] == t) ++k;
  }
  return k == s.size();
}

/// Longest common subsequence by enumerating every subsequence of `a`.
/// Exponential; keep |a| small.
inline std::size_t brute_lcs(const std::vector<int>& a, const std::vector<int>& b) {
  std::size_t best = 0;
  const std::size_t subsets = std::size_t{1} << a.size();
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    std::vector<int> s;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (mask >> i & 1U) s.push_back(a[i]);
    }
    if (s.size() > best && is_subsequence(s, b)) best = s.size();
  }
  return best;
}

}  // namespace oracle
