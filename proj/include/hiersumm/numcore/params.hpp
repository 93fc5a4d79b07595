#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hiersumm/errors.hpp"
#include "hiersumm/numcore/tensor.hpp"
#include "hiersumm/random.hpp"

namespace hiersumm::num {

/// Initialisation stdev for every weight, embeddings included.
inline constexpr double kInitStdev = 0.1;

/// Named learnable tensors. Iteration order is lexicographic by name, which
/// fixes the order of initialisation draws and of checkpoint entries.
template <typename T>
class ParamStore {
 public:
  Tensor<T>& add(const std::string& name, std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) {
      throw DimensionError("parameter " + name + " has an empty shape " + shape_str(rows, cols));
    }
    auto [it, inserted] = params_.try_emplace(name, rows, cols);
    if (!inserted) throw ConfigError("duplicate parameter name: " + name);
    return it->second;
  }

  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  const Tensor<T>& at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second;
  }
  Tensor<T>& at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second;
  }

  void freeze(const std::string& name) { at(name), frozen_.insert(name); }
  bool trainable(const std::string& name) const { return frozen_.count(name) == 0; }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& [name, t] : params_) out.push_back(name);
    return out;
  }

  /// Total number of scalars.
  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : params_) n += t.size();
    return n;
  }

  /// Scalars in parameters whose name starts with `prefix`.
  std::size_t scalar_count(const std::string& prefix) const {
    std::size_t n = 0;
    for (const auto& [name, t] : params_) {
      if (name.rfind(prefix, 0) == 0) n += t.size();
    }
    return n;
  }

  /// Every entry ~ Normal(0, stdev), drawn in name order.
  void init_normal(Rng& rng, double stdev = kInitStdev) {
    for (auto& [name, t] : params_) {
      for (auto& x : t.data) x = static_cast<T>(rng.normal(0.0, stdev));
    }
  }

  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  std::size_t size() const { return params_.size(); }

  /// Zero-filled gradient table covering every trainable parameter.
  GradTable<T> zero_grads() const {
    GradTable<T> g;
    for (const auto& [name, t] : params_) {
      if (trainable(name)) g.emplace(name, std::vector<T>(t.size(), T(0)));
    }
    return g;
  }

 private:
  std::map<std::string, Tensor<T>> params_;
  std::set<std::string> frozen_;
};

}  // namespace hiersumm::num
