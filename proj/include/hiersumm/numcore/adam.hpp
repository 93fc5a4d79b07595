#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "hiersumm/errors.hpp"
#include "hiersumm/numcore/params.hpp"
#include "hiersumm/numcore/tensor.hpp"

namespace hiersumm::num {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  AdamConfig config;
  std::size_t step_count = 0;
  GradTable<T> first_moment;
  GradTable<T> second_moment;
};

/// Bias-corrected Adam update of every trainable parameter.
/// `grads` must hold exactly one entry per trainable parameter.
template <typename T>
void adam_step(AdamState<T>& state, ParamStore<T>& params, const GradTable<T>& grads) {
  std::size_t trainable = 0;
  for (const auto& [name, tensor] : params) {
    if (!params.trainable(name)) continue;
    ++trainable;
    auto it = grads.find(name);
    if (it == grads.end()) throw ConfigError("adam_step: no gradient for parameter " + name);
    if (it->second.size() != tensor.size()) {
      throw DimensionError("adam_step: gradient for " + name + " has " +
                           std::to_string(it->second.size()) + " entries, parameter has " +
                           std::to_string(tensor.size()));
    }
  }
  if (grads.size() != trainable) {
    for (const auto& [name, g] : grads) {
      if (!params.contains(name) || !params.trainable(name)) {
        throw ConfigError("adam_step: gradient for unknown or frozen parameter " + name);
      }
    }
  }

  state.step_count += 1;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step_count);
  const double corr1 = 1.0 - std::pow(c.beta1, t);
  const double corr2 = 1.0 - std::pow(c.beta2, t);
  for (auto& [name, tensor] : params) {
    if (!params.trainable(name)) continue;
    const auto& g = grads.at(name);
    auto& m = state.first_moment[name];
    auto& v = state.second_moment[name];
    if (m.empty()) m.assign(tensor.size(), T(0));
    if (v.empty()) v.assign(tensor.size(), T(0));
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      m[i] = static_cast<T>(c.beta1 * m[i] + (1.0 - c.beta1) * g[i]);
      v[i] = static_cast<T>(c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i]);
      const double m_hat = m[i] / corr1;
      const double v_hat = v[i] / corr2;
      tensor.data[i] -= static_cast<T>(c.lr * m_hat / (std::sqrt(v_hat) + c.eps));
    }
  }
}

/// Rescales all gradients so their joint L2 norm is at most max_norm.
/// Returns the norm before clipping. max_norm <= 0 disables clipping.
template <typename T>
double clip_global_norm(GradTable<T>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, g] : grads)
    for (T x : g) sq += static_cast<double>(x) * static_cast<double>(x);
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const T s = static_cast<T>(max_norm / norm);
    for (auto& [name, g] : grads)
      for (T& x : g) x *= s;
  }
  return norm;
}

}  // namespace hiersumm::num
