#pragma once

#include <cstddef>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "hiersumm/errors.hpp"

namespace hiersumm::corpus {

/// One document-summary pair: pre-segmented sentences and a title.
struct SourceDoc {
  std::int64_t id = -1;  // position in the input collection
  std::vector<std::string> sentences;
  std::string title;
};

enum class SummaryOrdering { kFirstOccurrence, kDensity };

/// Interleaving ranges: r ~ U(a, b) documents, q ~ U(m, n) sentences each.
struct InterleavePreset {
  int a = 2;
  int b = 2;
  int m = 5;
  int n = 5;
  SummaryOrdering ordering = SummaryOrdering::kFirstOccurrence;

  void validate() const {
    if (a < 2 || b < a) {
      throw ConfigError("preset needs 2 <= a <= b, got a=" + std::to_string(a) + " b=" + std::to_string(b));
    }
    if (m < 1 || n < m) {
      throw ConfigError("preset needs 1 <= m <= n, got m=" + std::to_string(m) + " n=" + std::to_string(n));
    }
  }

  static InterleavePreset easy() { return {2, 2, 5, 5}; }
  static InterleavePreset medium() { return {2, 3, 2, 5}; }
  static InterleavePreset hard() { return {2, 5, 2, 5}; }

  static InterleavePreset by_name(const std::string& name) {
    if (name == "easy") return easy();
    if (name == "medium") return medium();
    if (name == "hard") return hard();
    throw ConfigError("unknown preset '" + name + "' (expected easy, medium or hard)");
  }
};

/// One interleaved channel. thread_ids[i] is the index into `summaries` of
/// the thread post i belongs to.
struct CorpusInstance {
  std::vector<std::string> posts;
  std::vector<int> thread_ids;
  std::vector<std::string> summaries;
  nlohmann::json meta = nlohmann::json::object();

  std::size_t thread_count() const { return summaries.size(); }

  /// Structural invariants; throws InvalidInput describing the first breach.
  void validate() const {
    if (posts.size() != thread_ids.size()) {
      throw InvalidInput("instance has " + std::to_string(posts.size()) + " posts but " +
                         std::to_string(thread_ids.size()) + " thread ids");
    }
    std::vector<bool> seen(summaries.size(), false);
    for (int t : thread_ids) {
      if (t < 0 || static_cast<std::size_t>(t) >= summaries.size()) {
        throw InvalidInput("thread id " + std::to_string(t) + " has no summary (" +
                           std::to_string(summaries.size()) + " summaries)");
      }
      seen[static_cast<std::size_t>(t)] = true;
    }
    for (std::size_t k = 0; k < seen.size(); ++k) {
      if (!seen[k]) throw InvalidInput("summary " + std::to_string(k) + " has no posts");
    }
  }

  friend bool operator==(const CorpusInstance&, const CorpusInstance&) = default;
};

}  // namespace hiersumm::corpus
