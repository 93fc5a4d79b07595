#pragma once

#include <cstddef>
#include <nlohmann/json.hpp>
#include <string>

#include "hiersumm/errors.hpp"
#include "hiersumm/textproc/encode.hpp"

namespace hiersumm::model {

enum class Variant { kSeq2Seq, kSeq2Hier, kHier2Seq, kHier2Hier };
enum class GammaMode { kSigmoid, kSoftmax };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::kSeq2Seq: return "seq2seq";
    case Variant::kSeq2Hier: return "seq2hier";
    case Variant::kHier2Seq: return "hier2seq";
    case Variant::kHier2Hier: return "hier2hier";
  }
  return "?";
}

inline Variant variant_from_string(const std::string& s) {
  if (s == "seq2seq") return Variant::kSeq2Seq;
  if (s == "seq2hier") return Variant::kSeq2Hier;
  if (s == "hier2seq") return Variant::kHier2Seq;
  if (s == "hier2hier") return Variant::kHier2Hier;
  throw ConfigError("unknown variant '" + s + "' (expected seq2seq, seq2hier, hier2seq or hier2hier)");
}

inline bool hierarchical_encoder(Variant v) { return v == Variant::kHier2Seq || v == Variant::kHier2Hier; }
inline bool hierarchical_decoder(Variant v) { return v == Variant::kSeq2Hier || v == Variant::kHier2Hier; }

struct ModelConfig {
  std::size_t d = 100;
  std::size_t vocab_size = 0;
  text::EncodeLimits limits{};
  std::size_t thread_cap = 5;
  Variant variant = Variant::kHier2Hier;
  bool gamma_enabled = true;
  bool beta_enabled = true;
  GammaMode gamma_mode = GammaMode::kSigmoid;
  double dropout = 0.1;
  double lambda = 1.0;
  bool share_embeddings = true;

  void validate() const {
    if (d == 0) throw ConfigError("model dimension must be positive");
    if (vocab_size <= 5) throw ConfigError("vocab size must exceed the 5 special tokens");
    if (thread_cap == 0) throw ConfigError("thread cap must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
    if (variant == Variant::kSeq2Seq && (gamma_enabled || beta_enabled)) {
      throw ConfigError("seq2seq has no post/phrase attention; disable gamma and beta");
    }
    if (!gamma_enabled && gamma_mode == GammaMode::kSoftmax) {
      throw ConfigError("softmax gamma requested with gamma disabled");
    }
  }

  /// Label used in reports, e.g. "hier2hier(+g-b)".
  std::string label() const {
    std::string s = to_string(variant);
    if (variant != Variant::kSeq2Seq) {
      s += std::string("(") + (gamma_enabled ? (gamma_mode == GammaMode::kSoftmax ? "+g~" : "+g") : "-g") +
           (beta_enabled ? "+b" : "-b") + ")";
    }
    return s;
  }
};

inline nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"d", c.d},
          {"vocab_size", c.vocab_size},
          {"p", c.limits.p},
          {"q", c.limits.q},
          {"max_posts", c.limits.max_posts},
          {"max_threads", c.limits.max_threads},
          {"flat", c.limits.flat},
          {"thread_cap", c.thread_cap},
          {"variant", to_string(c.variant)},
          {"gamma", c.gamma_enabled},
          {"beta", c.beta_enabled},
          {"gamma_mode", c.gamma_mode == GammaMode::kSoftmax ? "softmax" : "sigmoid"},
          {"dropout", c.dropout},
          {"lambda", c.lambda},
          {"share_embeddings", c.share_embeddings}};
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.d = j.at("d").template get<std::size_t>();
    c.vocab_size = j.at("vocab_size").template get<std::size_t>();
    c.limits.p = j.at("p").template get<std::size_t>();
    c.limits.q = j.at("q").template get<std::size_t>();
    c.limits.max_posts = j.at("max_posts").template get<std::size_t>();
    c.limits.max_threads = j.at("max_threads").template get<std::size_t>();
    c.limits.flat = j.at("flat").template get<std::size_t>();
    c.thread_cap = j.at("thread_cap").template get<std::size_t>();
    c.variant = variant_from_string(j.at("variant").template get<std::string>());
    c.gamma_enabled = j.at("gamma").template get<bool>();
    c.beta_enabled = j.at("beta").template get<bool>();
    const auto mode = j.at("gamma_mode").template get<std::string>();
    if (mode != "sigmoid" && mode != "softmax") throw ConfigError("unknown gamma_mode '" + mode + "'");
    c.gamma_mode = mode == "softmax" ? GammaMode::kSoftmax : GammaMode::kSigmoid;
    c.dropout = j.at("dropout").template get<double>();
    c.lambda = j.at("lambda").template get<double>();
    c.share_embeddings = j.at("share_embeddings").template get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace hiersumm::model
