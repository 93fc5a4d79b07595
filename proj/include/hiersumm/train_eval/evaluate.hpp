#pragma once

#include <cstddef>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "hiersumm/errors.hpp"
#include "hiersumm/textproc/tokenize.hpp"
#include "hiersumm/train_eval/rouge.hpp"

namespace hiersumm::eval {

enum class ScoreMode { kRecall, kF1 };

inline ScoreMode score_mode_from_string(const std::string& s) {
  if (s == "recall") return ScoreMode::kRecall;
  if (s == "f1") return ScoreMode::kF1;
  throw ConfigError("unknown score mode '" + s + "' (expected recall or f1)");
}

struct EvalOptions {
  ScoreMode mode = ScoreMode::kRecall;
  std::size_t budget = 0;  // candidate tokens kept across all summaries; 0 = no cap
  bool paired = false;     // score generated k against reference k instead of concatenations
};

struct InstanceScore {
  RougeScore score;
  std::size_t generated = 0;
  std::size_t references = 0;
};

struct CorpusScore {
  RougeScore mean;
  std::vector<InstanceScore> per_instance;
  std::size_t count_mismatches = 0;
};

namespace detail {

inline void accumulate(Prf& into, const Prf& x, double w) {
  into.recall += w * x.recall;
  into.precision += w * x.precision;
  into.f1 += w * x.f1;
  into.degenerate = into.degenerate || x.degenerate;
}

inline void accumulate(RougeScore& into, const RougeScore& x, double w) {
  accumulate(into.r1, x.r1, w);
  accumulate(into.r2, x.r2, w);
  accumulate(into.rl, x.rl, w);
}

}  // namespace detail

inline InstanceScore score_instance(const std::vector<std::string>& generated,
                                    const std::vector<std::string>& references, const EvalOptions& opt = {}) {
  using Tokens = std::vector<std::string>;
  std::vector<Tokens> cand, ref;
  std::size_t kept = 0;
  for (const auto& s : generated) {
    Tokens t = text::tokenize(s);
    if (opt.budget != 0) {
      const std::size_t room = opt.budget > kept ? opt.budget - kept : 0;
      if (t.size() > room) t.resize(room);
    }
    kept += t.size();
    cand.push_back(std::move(t));
  }
  for (const auto& s : references) ref.push_back(text::tokenize(s));

  InstanceScore out;
  out.generated = generated.size();
  out.references = references.size();
  if (!opt.paired) {
    Tokens c, r;
    for (const auto& t : cand) c.insert(c.end(), t.begin(), t.end());
    for (const auto& t : ref) r.insert(r.end(), t.begin(), t.end());
    out.score = rouge_all(c, r);
    return out;
  }
  const std::size_t pairs = std::max(cand.size(), ref.size());
  if (pairs == 0) return out;
  for (std::size_t k = 0; k < pairs; ++k) {
    const Tokens empty;
    const Tokens& c = k < cand.size() ? cand[k] : empty;
    const Tokens& r = k < ref.size() ? ref[k] : empty;
    detail::accumulate(out.score, rouge_all(c, r), 1.0 / static_cast<double>(pairs));
  }
  return out;
}

/// Mean of per-instance scores. Instances pair up by position.
inline CorpusScore evaluate_corpus(const std::vector<std::vector<std::string>>& generated,
                                   const std::vector<std::vector<std::string>>& references,
                                   const EvalOptions& opt = {}) {
  if (generated.size() != references.size()) {
    throw InvalidInput("evaluate: " + std::to_string(generated.size()) + " generated instances for " +
                       std::to_string(references.size()) + " references");
  }
  if (references.empty()) throw InvalidInput("evaluate: no instances");
  CorpusScore out;
  const double w = 1.0 / static_cast<double>(references.size());
  for (std::size_t i = 0; i < references.size(); ++i) {
    auto s = score_instance(generated[i], references[i], opt);
    if (s.generated != s.references) ++out.count_mismatches;
    detail::accumulate(out.mean, s.score, w);
    out.per_instance.push_back(std::move(s));
  }
  return out;
}

inline nlohmann::json prf_json(const Prf& p) {
  return {{"recall", p.recall}, {"precision", p.precision}, {"f1", p.f1}};
}

inline nlohmann::json score_json(const RougeScore& s) {
  return {{"r1", prf_json(s.r1)}, {"r2", prf_json(s.r2)}, {"rl", prf_json(s.rl)}};
}

inline nlohmann::json report_json(const CorpusScore& c, const EvalOptions& opt) {
  auto pick = [&](const Prf& p) { return opt.mode == ScoreMode::kRecall ? p.recall : p.f1; };
  nlohmann::json j = score_json(c.mean);
  j["mode"] = opt.mode == ScoreMode::kRecall ? "recall" : "f1";
  j["budget"] = opt.budget;
  j["paired"] = opt.paired;
  j["instances"] = c.per_instance.size();
  j["count_mismatches"] = c.count_mismatches;
  j["score"] = {{"r1", pick(c.mean.r1)}, {"r2", pick(c.mean.r2)}, {"rl", pick(c.mean.rl)}};
  return j;
}

}  // namespace hiersumm::eval
