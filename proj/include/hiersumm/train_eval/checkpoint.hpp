#pragma once

#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>

#include "hiersumm/errors.hpp"
#include "hiersumm/model/config.hpp"
#include "hiersumm/model/model.hpp"
#include "hiersumm/numcore/checkpoint.hpp"
#include "hiersumm/textproc/vocab.hpp"

namespace hiersumm::train {

// Checkpoint file: one JSON object
//   {"format": "hiersumm-checkpoint-1", "config": {...}, "vocab": [...],
//    "params": {...}, "adam": {...} (optional), "progress": {...}}

inline constexpr const char* kCheckpointFormat = "hiersumm-checkpoint-1";

template <typename T>
nlohmann::json checkpoint_json(const model::Model<T>& m, const text::Vocab& vocab,
                               const num::AdamState<T>* adam = nullptr,
                               const nlohmann::json& progress = nlohmann::json::object()) {
  nlohmann::json j = {{"format", kCheckpointFormat},
                      {"config", model::config_to_json(m.config())},
                      {"vocab", text::vocab_to_json(vocab)},
                      {"params", num::params_to_json(m.params())},
                      {"progress", progress}};
  if (adam) j["adam"] = num::adam_to_json(*adam);
  return j;
}

template <typename T>
void save_checkpoint(const std::string& path, const model::Model<T>& m, const text::Vocab& vocab,
                     const num::AdamState<T>* adam = nullptr,
                     const nlohmann::json& progress = nlohmann::json::object()) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write checkpoint '" + path + "'");
  out << checkpoint_json(m, vocab, adam, progress).dump() << '\n';
  if (!out) throw InvalidInput("write failed for checkpoint '" + path + "'");
}

template <typename T>
struct LoadedCheckpoint {
  model::Model<T> model;
  text::Vocab vocab;
  std::optional<num::AdamState<T>> adam;
  nlohmann::json progress;
};

template <typename T>
LoadedCheckpoint<T> checkpoint_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != kCheckpointFormat) {
    throw InvalidInput("not a hiersumm checkpoint");
  }
  try {
    model::Model<T> m(model::config_from_json(j.at("config")));
    num::params_from_json(m.params(), j.at("params"));
    auto vocab = text::vocab_from_json(j.at("vocab"));
    if (vocab.size() != m.config().vocab_size) throw InvalidInput("checkpoint vocab size disagrees with its config");
    std::optional<num::AdamState<T>> adam;
    if (j.contains("adam")) adam = num::adam_from_json<T>(j.at("adam"));
    return {std::move(m), std::move(vocab), std::move(adam), j.value("progress", nlohmann::json::object())};
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed checkpoint: ") + e.what());
  }
}

template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open checkpoint '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("checkpoint '" + path + "' is not valid JSON: " + e.what());
  }
  return checkpoint_from_json<T>(j);
}

}  // namespace hiersumm::train
