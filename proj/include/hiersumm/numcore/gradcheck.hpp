#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "hiersumm/errors.hpp"
#include "hiersumm/numcore/graph.hpp"
#include "hiersumm/numcore/params.hpp"

namespace hiersumm::num {

inline constexpr std::size_t kGradcheckMaxScalars = 50'000;

/// Relative errors are |a - n| / max(|a|, |n|, floor). The floor keeps
/// round-off on near-zero gradients from reading as a large relative error.
inline constexpr double kGradcheckDenominatorFloor = 1e-3;

struct GradcheckReport {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t scalars_checked = 0;
};

inline double relative_error(double analytic, double numeric,
                             double floor = kGradcheckDenominatorFloor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

/// Compares the analytic gradient of `loss_fn` against central differences
/// (f(p + h) - f(p - h)) / 2h for every scalar of every trainable parameter.
/// `loss_fn(Graph<double>&)` must build a scalar loss from `params` and be
/// deterministic.
template <typename LossFn>
GradcheckReport finite_diff_gradcheck(ParamStore<double>& params, LossFn&& loss_fn, double h = 1e-5,
                                      double floor = kGradcheckDenominatorFloor) {
  const std::size_t scalars = params.scalar_count();
  if (scalars > kGradcheckMaxScalars) {
    throw InvalidInput("gradcheck refused: model has " + std::to_string(scalars) +
                       " scalar parameters, limit is " + std::to_string(kGradcheckMaxScalars));
  }

  GradTable<double> analytic;
  {
    Graph<double> g(true);
    auto loss = loss_fn(g);
    g.backward(loss);
    analytic = g.gradients();
  }

  auto eval = [&]() {
    Graph<double> g(false);
    return loss_fn(g).item();
  };

  GradcheckReport report;
  for (const std::string& name : params.names()) {
    if (!params.trainable(name)) continue;
    auto& data = params.at(name).data;
    const auto it = analytic.find(name);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + h;
      const double plus = eval();
      data[i] = saved - h;
      const double minus = eval();
      data[i] = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double a = it == analytic.end() ? 0.0 : it->second[i];
      const double err = relative_error(a, numeric, floor);
      ++report.scalars_checked;
      if (err > report.max_rel_error || report.worst_parameter.empty()) {
        report.max_rel_error = err;
        report.worst_parameter = name;
        report.worst_index = i;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace hiersumm::num
