#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "hiersumm/errors.hpp"

namespace hiersumm::eval {

struct Prf {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  bool degenerate = false;  // reference too short to hold a single unit

  friend bool operator==(const Prf&, const Prf&) = default;
};

inline Prf make_prf(double overlap, double ref_units, double cand_units, bool degenerate) {
  Prf s;
  s.degenerate = degenerate;
  s.recall = ref_units > 0 ? overlap / ref_units : 0.0;
  s.precision = cand_units > 0 ? overlap / cand_units : 0.0;
  s.f1 = s.recall + s.precision > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

/// Clipped n-gram overlap: each candidate n-gram matches at most as many
/// times as it occurs in the reference.
template <typename Tok>
Prf rouge_n(const std::vector<Tok>& cand, const std::vector<Tok>& ref, std::size_t n) {
  if (n == 0) throw InvalidInput("rouge_n: n must be positive");
  auto grams = [n](const std::vector<Tok>& xs) {
    std::map<std::vector<Tok>, std::size_t> m;
    for (std::size_t i = 0; i + n <= xs.size(); ++i) ++m[std::vector<Tok>(xs.begin() + i, xs.begin() + i + n)];
    return m;
  };
  if (ref.size() < n) return make_prf(0, 0, 0, true);
  const auto rg = grams(ref), cg = grams(cand);
  std::size_t overlap = 0;
  for (const auto& [g, c] : cg) {
    auto it = rg.find(g);
    if (it != rg.end()) overlap += std::min(c, it->second);
  }
  const std::size_t ref_units = ref.size() - n + 1;
  const std::size_t cand_units = cand.size() >= n ? cand.size() - n + 1 : 0;
  return make_prf(static_cast<double>(overlap), static_cast<double>(ref_units), static_cast<double>(cand_units),
                  false);
}

template <typename Tok>
std::size_t lcs_length(const std::vector<Tok>& a, const std::vector<Tok>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

template <typename Tok>
Prf rouge_l(const std::vector<Tok>& cand, const std::vector<Tok>& ref) {
  if (ref.empty()) return make_prf(0, 0, 0, true);
  const auto l = static_cast<double>(lcs_length(cand, ref));
  return make_prf(l, static_cast<double>(ref.size()), static_cast<double>(cand.size()), false);
}

struct RougeScore {
  Prf r1, r2, rl;
};

template <typename Tok>
RougeScore rouge_all(const std::vector<Tok>& cand, const std::vector<Tok>& ref) {
  return {rouge_n(cand, ref, 1), rouge_n(cand, ref, 2), rouge_l(cand, ref)};
}

}  // namespace hiersumm::eval
