#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "hiersumm/errors.hpp"
#include "hiersumm/model/model.hpp"
#include "hiersumm/numcore/graph.hpp"
#include "hiersumm/random.hpp"
#include "hiersumm/textproc/encode.hpp"

namespace hiersumm::train {

/// Scalar summary of one teacher-forced pass.
///   total = nll_sum + lambda * stop_bce, per instance
struct LossBreakdown {
  double nll_word = 0.0;  // mean negative log-likelihood per target token
  double nll_sum = 0.0;
  double stop_bce = 0.0;  // summed over thread steps
  double total = 0.0;
  std::size_t token_count = 0;
};

template <typename T>
struct LossResult {
  num::Value<T> total;  // differentiable
  LossBreakdown breakdown;
};

/// Negated log-likelihood of the reference words plus lambda times the full
/// binary cross-entropy of the stop head. `where` labels NaN diagnostics.
template <typename T>
LossResult<T> compute_loss(const model::Model<T>& m, num::Graph<T>& g, const text::EncodedInstance& x,
                           Rng* dropout = nullptr, const std::string& where = "") {
  auto out = m.forward_loss(g, x, dropout);
  LossBreakdown b;
  b.token_count = out.tokens;
  b.nll_sum = static_cast<double>(out.nll_sum.item());
  b.nll_word = out.tokens ? b.nll_sum / static_cast<double>(out.tokens) : 0.0;
  b.stop_bce = static_cast<double>(out.stop_bce.item());
  b.total = static_cast<double>(out.total.item());
  if (!std::isfinite(b.total)) {
    throw NumericalError("non-finite loss" + (where.empty() ? std::string() : " at " + where) +
                         ": nll_sum=" + std::to_string(b.nll_sum) + " stop_bce=" + std::to_string(b.stop_bce));
  }
  return {out.total, b};
}

}  // namespace hiersumm::train
