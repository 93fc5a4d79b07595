#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hiersumm/model/config.hpp"
#include "hiersumm/model/model.hpp"
#include "hiersumm/numcore/gradcheck.hpp"
#include "hiersumm/random.hpp"
#include "hiersumm/textproc/encode.hpp"

namespace hiersumm::train {

struct SyntheticShape {
  std::size_t vocab = 20;
  std::size_t posts = 4;
  std::size_t p = 5;
  std::size_t q = 4;
  std::size_t threads = 2;
  bool allow_empty_posts = true;
};

/// Encoded instance with random ids and lengths. Posts may be all PAD when
/// allowed, except the first.
inline text::EncodedInstance synthetic_instance(Rng& rng, const SyntheticShape& s) {
  text::EncodedInstance e;
  const int lo = text::kSpecialCount, hi = static_cast<int>(s.vocab) - 1;
  if (hi < lo || s.posts == 0 || s.p == 0 || s.q == 0 || s.threads == 0) {
    throw ConfigError("synthetic instance: shape too small");
  }
  e.posts = {s.posts, s.p, std::vector<int>(s.posts * s.p, text::kPad)};
  for (std::size_t i = 0; i < s.posts; ++i) {
    auto len = static_cast<std::size_t>(
        rng.uniform_int(s.allow_empty_posts ? 0 : 1, static_cast<std::int64_t>(s.p)));
    if (i == 0 && len == 0) len = 1;
    for (std::size_t j = 0; j < len; ++j) e.posts.ids[i * s.p + j] = static_cast<int>(rng.uniform_int(lo, hi));
    e.post_len.push_back(len);
    e.post_mask.push_back(len > 0);
    if (i > 0) e.flat_source.push_back(text::kSep);
    for (std::size_t j = 0; j < len; ++j) e.flat_source.push_back(e.posts.ids[i * s.p + j]);
  }
  const std::size_t width = s.q + 1;
  e.summaries = {s.threads, width, std::vector<int>(s.threads * width, text::kPad)};
  for (std::size_t k = 0; k < s.threads; ++k) {
    const auto len = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(s.q)));
    if (k > 0) e.flat_target.push_back(text::kSep);
    for (std::size_t j = 0; j < len; ++j) {
      const int id = static_cast<int>(rng.uniform_int(lo, hi));
      e.summaries.ids[k * width + j] = id;
      e.flat_target.push_back(id);
    }
    e.summaries.ids[k * width + len] = text::kEos;
    e.stop_labels.push_back(k + 1 == s.threads ? 1 : 0);
  }
  e.flat_target.push_back(text::kEos);
  return e;
}

inline constexpr double kModelGradcheckTolerance = 1e-4;

struct ModelGradcheck {
  num::GradcheckReport report;
  std::size_t parameters = 0;
  bool pass = false;
};

/// Finite-difference check of the full teacher-forced loss (dropout off) in
/// double precision on one synthetic instance.
inline ModelGradcheck gradcheck_model(model::ModelConfig cfg, std::uint64_t seed, SyntheticShape shape = {},
                                      double h = 1e-5) {
  shape.vocab = cfg.vocab_size;
  shape.p = cfg.limits.p;
  shape.q = cfg.limits.q;
  model::Model<double> m(cfg, seed);
  Rng rng(derive_seed(seed, 0x6772));
  const auto x = synthetic_instance(rng, shape);
  ModelGradcheck out;
  out.parameters = m.parameter_count();
  out.report = num::finite_diff_gradcheck(
      m.params(), [&](num::Graph<double>& g) { return m.forward_loss(g, x).total; }, h);
  out.pass = out.report.max_rel_error < kModelGradcheckTolerance;
  return out;
}

}  // namespace hiersumm::train
