#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hiersumm/corpus/types.hpp"
#include "hiersumm/errors.hpp"
#include "hiersumm/random.hpp"

namespace hiersumm::corpus {

/// Small synthetic document collection whose titles are recoverable from the
/// text: every sentence of a document mentions its subject and its attribute
/// among filler words, and the title is "<subject> and <attribute>".
struct ToyDocOptions {
  std::size_t sentences_per_doc = 5;
  std::size_t fillers_per_sentence = 3;
  std::size_t subjects = 12;    // at most 16
  std::size_t attributes = 12;  // at most 16
  std::size_t fillers = 20;     // at most 24
};

namespace detail {

inline constexpr std::array<std::string_view, 16> kToySubjects = {
    "caffeine", "insulin", "aspirin", "zinc",    "iron",   "statins",  "melatonin", "lithium",
    "ozone",    "nitrate", "heparin", "codeine", "folate", "retinol", "quinine",   "calcium"};
inline constexpr std::array<std::string_view, 16> kToyAttributes = {
    "sleep", "memory", "growth", "fatigue", "appetite", "mood",  "vision",  "balance",
    "pain",  "stress", "speech", "weight",  "fever",    "heart", "hearing", "skin"};
inline constexpr std::array<std::string_view, 24> kToyFillers = {
    "the",    "a",     "was",   "in",    "patients", "study", "trial", "we",
    "found",  "with",  "after", "dose",  "effect",   "group", "rats",  "levels",
    "report", "cases", "data",  "shows", "more",     "less",  "early", "late"};

}  // namespace detail

inline std::vector<SourceDoc> make_toy_docs(std::size_t count, std::uint64_t seed, const ToyDocOptions& o = {}) {
  if (o.subjects == 0 || o.subjects > detail::kToySubjects.size() || o.attributes == 0 ||
      o.attributes > detail::kToyAttributes.size() || o.fillers > detail::kToyFillers.size() ||
      o.sentences_per_doc == 0) {
    throw ConfigError("toy docs: word-list sizes out of range");
  }
  Rng rng(seed);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1)); };

  std::vector<SourceDoc> docs;
  docs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::string subject(detail::kToySubjects[pick(o.subjects)]);
    const std::string attribute(detail::kToyAttributes[pick(o.attributes)]);
    SourceDoc d;
    d.id = static_cast<std::int64_t>(i);
    d.title = subject + " and " + attribute;
    for (std::size_t s = 0; s < o.sentences_per_doc; ++s) {
      std::vector<std::string> words;
      for (std::size_t f = 0; f < o.fillers_per_sentence && o.fillers > 0; ++f) {
        words.emplace_back(detail::kToyFillers[pick(o.fillers)]);
      }
      // Subject precedes attribute; both land at random slots.
      const auto si = pick(words.size() + 1);
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(si), subject);
      const auto ai = si + 1 + pick(words.size() - si);
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(ai), attribute);
      std::string sentence;
      for (const auto& w : words) sentence += w + " ";
      sentence += ".";
      d.sentences.push_back(std::move(sentence));
    }
    docs.push_back(std::move(d));
  }
  return docs;
}

}  // namespace hiersumm::corpus
