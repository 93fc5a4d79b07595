#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "hiersumm/corpus/density.hpp"
#include "hiersumm/corpus/interleave.hpp"
#include "hiersumm/corpus/jsonl.hpp"
#include "hiersumm/corpus/types.hpp"
#include "hiersumm/corpus/window.hpp"
#include "hiersumm/errors.hpp"
#include "hiersumm/random.hpp"

namespace hiersumm::corpus {

inline constexpr std::array<const char*, 3> kSplitNames = {"train", "eval", "test"};

struct SynthesisConfig {
  InterleavePreset preset = InterleavePreset::easy();
  std::uint64_t seed = 0;
  std::array<double, 3> split_ratios = {0.8, 0.1, 0.1};
  std::size_t window_stride = 1;
  std::size_t max_instances = 0;  // per split; 0 = unlimited

  void validate() const {
    preset.validate();
    double total = 0;
    for (double r : split_ratios) {
      if (!(r >= 0.0)) throw ConfigError("split ratios must be non-negative");
      total += r;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
    if (window_stride == 0) throw ConfigError("window stride must be positive");
  }
};

struct SynthesizedCorpus {
  std::array<std::vector<CorpusInstance>, 3> splits;
  nlohmann::json stats = nlohmann::json::object();
};

inline nlohmann::json split_stats(const std::vector<CorpusInstance>& xs) {
  std::map<std::size_t, std::size_t> posts, threads;
  double thread_sum = 0, post_sum = 0;
  for (const auto& x : xs) {
    ++posts[x.posts.size()];
    ++threads[x.thread_count()];
    thread_sum += static_cast<double>(x.thread_count());
    post_sum += static_cast<double>(x.posts.size());
  }
  auto hist = [](const std::map<std::size_t, std::size_t>& h) {
    nlohmann::json j = nlohmann::json::array();
    for (auto [k, v] : h) j.push_back({k, v});
    return j;
  };
  const double n = xs.empty() ? 1.0 : static_cast<double>(xs.size());
  return {{"instances", xs.size()},
          {"post_count_histogram", hist(posts)},
          {"thread_count_histogram", hist(threads)},
          {"mean_posts", post_sum / n},
          {"mean_threads", thread_sum / n}};
}

/// Windows of b documents over contiguous split segments of `docs`, so no
/// window straddles a split boundary. Documents with fewer than n sentences
/// are dropped first. Window i of split s draws from its own generator
/// seeded by (seed, s, i), which keeps output independent of the cap.
inline SynthesizedCorpus synthesize_corpus(std::span<const SourceDoc> docs, const SynthesisConfig& cfg) {
  cfg.validate();
  const auto& preset = cfg.preset;

  std::vector<SourceDoc> usable;
  for (const auto& d : docs) {
    if (d.sentences.size() >= static_cast<std::size_t>(preset.n) && !d.title.empty()) usable.push_back(d);
  }

  SynthesizedCorpus out;
  const std::size_t total = usable.size();
  std::array<std::size_t, 4> bounds{};
  bounds[1] = static_cast<std::size_t>(std::floor(cfg.split_ratios[0] * static_cast<double>(total)));
  bounds[2] = bounds[1] + static_cast<std::size_t>(std::floor(cfg.split_ratios[1] * static_cast<double>(total)));
  bounds[3] = total;

  const std::span<const SourceDoc> all(usable);
  for (std::size_t s = 0; s < 3; ++s) {
    const auto segment = all.subspan(bounds[s], bounds[s + 1] - bounds[s]);
    const Windows<SourceDoc> wins(segment, static_cast<std::size_t>(preset.b), cfg.window_stride);
    auto& dest = out.splits[s];
    for (std::size_t i = 0; i < wins.size(); ++i) {
      if (cfg.max_instances != 0 && dest.size() >= cfg.max_instances) break;
      Rng rng(derive_seed(cfg.seed, (static_cast<std::uint64_t>(s) << 32) | i));
      auto x = interleave_window(wins[i], preset, rng);
      if (preset.ordering == SummaryOrdering::kDensity) x = density_order(x);
      x.meta["seed"] = cfg.seed;
      x.meta["split"] = kSplitNames[s];
      x.meta["window"] = i;
      dest.push_back(std::move(x));
    }
  }

  nlohmann::json& st = out.stats;
  st["preset"] = {{"a", preset.a},
                  {"b", preset.b},
                  {"m", preset.m},
                  {"n", preset.n},
                  {"ordering", preset.ordering == SummaryOrdering::kDensity ? "density" : "first-occurrence"}};
  st["seed"] = cfg.seed;
  st["docs_offered"] = docs.size();
  st["docs_too_short"] = docs.size() - usable.size();
  for (std::size_t s = 0; s < 3; ++s) st["splits"][kSplitNames[s]] = split_stats(out.splits[s]);
  return out;
}

/// Writes train.jsonl, eval.jsonl, test.jsonl and stats.json into `dir`.
inline void write_corpus(const std::filesystem::path& dir, const SynthesizedCorpus& c) {
  std::filesystem::create_directories(dir);
  for (std::size_t s = 0; s < 3; ++s) {
    write_instances((dir / (std::string(kSplitNames[s]) + ".jsonl")).string(), c.splits[s]);
  }
  std::ofstream st(dir / "stats.json", std::ios::binary | std::ios::trunc);
  if (!st) throw InvalidInput("cannot write stats.json in '" + dir.string() + "'");
  st << c.stats.dump(2) << '\n';
}

}  // namespace hiersumm::corpus
