#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <unordered_map>
#include <vector>

#include "hiersumm/corpus/types.hpp"
#include "hiersumm/errors.hpp"
#include "hiersumm/textproc/tokenize.hpp"

namespace hiersumm::text {

inline constexpr int kPad = 0;
inline constexpr int kUnk = 1;
inline constexpr int kSos = 2;
inline constexpr int kEos = 3;
inline constexpr int kSep = 4;
inline constexpr int kSpecialCount = 5;
inline constexpr std::array<const char*, kSpecialCount> kSpecialTokens = {"<pad>", "[UNK]", "<sos>", "<eos>",
                                                                         "<sep>"};

/// Token <-> id map. Ids 0..4 are PAD, UNK, SOS, EOS, SEP; the rest are
/// ranked by training frequency.
class Vocab {
 public:
  Vocab() {
    for (const char* s : kSpecialTokens) push(s);
  }

  /// `tokens` excludes the specials.
  explicit Vocab(const std::vector<std::string>& tokens) : Vocab() {
    for (const auto& t : tokens) {
      if (index_.count(t)) throw InvalidInput("vocab: duplicate token '" + t + "'");
      push(t);
    }
  }

  std::size_t size() const { return tokens_.size(); }

  /// Specials cannot be produced from text; their spellings map to UNK.
  int id(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() || it->second < kSpecialCount ? kUnk : it->second;
  }

  bool contains(const std::string& token) const { return id(token) != kUnk || token == kSpecialTokens[kUnk]; }

  const std::string& token(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
      throw InvalidInput("vocab: id " + std::to_string(id) + " out of range [0, " + std::to_string(size()) + ")");
    }
    return tokens_[static_cast<std::size_t>(id)];
  }

  std::vector<std::string> regular_tokens() const { return {tokens_.begin() + kSpecialCount, tokens_.end()}; }

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  void push(const std::string& t) {
    index_.emplace(t, static_cast<int>(tokens_.size()));
    tokens_.push_back(t);
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

/// Keeps the max_size - 5 most frequent tokens of posts and summaries;
/// equal counts are ordered lexicographically.
inline Vocab build_vocab(const std::vector<corpus::CorpusInstance>& corpus, std::size_t max_size) {
  if (max_size < static_cast<std::size_t>(kSpecialCount)) {
    throw ConfigError("vocab max size must be at least " + std::to_string(kSpecialCount));
  }
  std::map<std::string, std::size_t> freq;
  for (const auto& x : corpus) {
    for (const auto& p : x.posts) for (auto& t : tokenize(p)) ++freq[t];
    for (const auto& s : x.summaries) for (auto& t : tokenize(s)) ++freq[t];
  }
  for (const char* s : kSpecialTokens) freq.erase(s);
  if (freq.empty()) throw InvalidInput("cannot build a vocabulary from an empty corpus");
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) { return x.second > y.second; });
  const std::size_t keep = std::min(ranked.size(), max_size - kSpecialCount);
  std::vector<std::string> tokens;
  tokens.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) tokens.push_back(ranked[i].first);
  return Vocab(tokens);
}

inline nlohmann::json vocab_to_json(const Vocab& v) { return v.regular_tokens(); }

inline Vocab vocab_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw InvalidInput("vocab: expected a token array");
  return Vocab(j.template get<std::vector<std::string>>());
}

/// File layout: the five special spellings, then one token per line; a
/// token's id is its 0-based line index.
inline void save_vocab(const std::string& path, const Vocab& v) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write vocab '" + path + "'");
  for (std::size_t i = 0; i < v.size(); ++i) out << v.token(static_cast<int>(i)) << '\n';
}

inline Vocab load_vocab(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open vocab '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  if (lines.size() < static_cast<std::size_t>(kSpecialCount)) throw InvalidInput("vocab file '" + path + "' is truncated");
  for (int i = 0; i < kSpecialCount; ++i) {
    if (lines[static_cast<std::size_t>(i)] != kSpecialTokens[static_cast<std::size_t>(i)]) {
      throw InvalidInput("vocab file '" + path + "': line " + std::to_string(i + 1) + " should be " +
                         kSpecialTokens[static_cast<std::size_t>(i)]);
    }
  }
  return Vocab(std::vector<std::string>(lines.begin() + kSpecialCount, lines.end()));
}

}  // namespace hiersumm::text
