#pragma once

// JSON (de)serialisation of parameters and optimizer state.
//
//   "params": { "<name>": {"shape": [rows, cols], "data": [row-major values]} }
//   "adam":   { "lr", "beta1", "beta2", "eps", "step_count",
//               "first_moment": {"<name>": [...]}, "second_moment": {...} }
//
// Values are written with round-trip precision, so a save/load cycle is exact.

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "hiersumm/errors.hpp"
#include "hiersumm/numcore/adam.hpp"
#include "hiersumm/numcore/params.hpp"

namespace hiersumm::num {

template <typename T>
nlohmann::json params_to_json(const ParamStore<T>& store) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [name, t] : store) {
    std::vector<double> data(t.data.begin(), t.data.end());
    out[name] = {{"shape", {t.rows, t.cols}}, {"data", std::move(data)}};
  }
  return out;
}

/// Loads values into an already-declared store. Names and shapes must match
/// exactly.
template <typename T>
void params_from_json(ParamStore<T>& store, const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidInput("checkpoint: \"params\" is not an object");
  if (j.size() != store.size()) {
    throw InvalidInput("checkpoint: holds " + std::to_string(j.size()) + " parameters, model declares " +
                       std::to_string(store.size()));
  }
  for (auto& [name, t] : store) {
    if (!j.contains(name)) throw InvalidInput("checkpoint: missing parameter " + name);
    const auto& entry = j.at(name);
    const auto shape = entry.at("shape").template get<std::vector<std::size_t>>();
    if (shape.size() != 2 || shape[0] != t.rows || shape[1] != t.cols) {
      throw DimensionError("checkpoint: parameter " + name + " has the wrong shape");
    }
    const auto data = entry.at("data").template get<std::vector<double>>();
    if (data.size() != t.size()) throw DimensionError("checkpoint: parameter " + name + " has the wrong size");
    for (std::size_t i = 0; i < data.size(); ++i) t.data[i] = static_cast<T>(data[i]);
  }
}

template <typename T>
nlohmann::json adam_to_json(const AdamState<T>& s) {
  auto table = [](const GradTable<T>& g) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [name, v] : g) out[name] = std::vector<double>(v.begin(), v.end());
    return out;
  };
  return {{"lr", s.config.lr},
          {"beta1", s.config.beta1},
          {"beta2", s.config.beta2},
          {"eps", s.config.eps},
          {"step_count", s.step_count},
          {"first_moment", table(s.first_moment)},
          {"second_moment", table(s.second_moment)}};
}

template <typename T>
AdamState<T> adam_from_json(const nlohmann::json& j) {
  AdamState<T> s;
  s.config.lr = j.at("lr").template get<double>();
  s.config.beta1 = j.at("beta1").template get<double>();
  s.config.beta2 = j.at("beta2").template get<double>();
  s.config.eps = j.at("eps").template get<double>();
  s.step_count = j.at("step_count").template get<std::size_t>();
  auto table = [](const nlohmann::json& t) {
    GradTable<T> out;
    for (const auto& [name, v] : t.items()) {
      const auto d = v.template get<std::vector<double>>();
      out.emplace(name, std::vector<T>(d.begin(), d.end()));
    }
    return out;
  };
  s.first_moment = table(j.at("first_moment"));
  s.second_moment = table(j.at("second_moment"));
  return s;
}

}  // namespace hiersumm::num
