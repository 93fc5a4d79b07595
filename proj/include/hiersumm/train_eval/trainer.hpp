#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "hiersumm/errors.hpp"
#include "hiersumm/model/model.hpp"
#include "hiersumm/numcore/adam.hpp"
#include "hiersumm/numcore/graph.hpp"
#include "hiersumm/random.hpp"
#include "hiersumm/textproc/encode.hpp"
#include "hiersumm/train_eval/loss.hpp"

namespace hiersumm::train {

struct TrainOptions {
  std::size_t batch = 64;
  double lr = 1e-4;
  std::size_t epochs = 1;
  std::size_t max_steps = 0;  // 0 = run all epochs
  double clip = 5.0;          // global gradient norm; <= 0 disables
  std::uint64_t seed = 0;
  bool shuffle = true;
  double running_decay = 0.99;
  std::size_t divergence_window = 100;
  double divergence_factor = 10.0;
};

struct StepLog {
  std::size_t step = 0;
  double loss = 0.0;  // batch mean of per-instance totals
  double running_avg_loss = 0.0;
  double nll = 0.0;       // per-token mean over the batch
  double stop_bce = 0.0;  // batch mean of per-instance sums
  double grad_norm = 0.0;
};

struct TrainResult {
  std::vector<StepLog> log;
  std::size_t steps = 0;
  std::size_t epochs_completed = 0;
  bool diverged = false;
};

struct TrainHooks {
  std::function<void(const StepLog&)> on_step;
  std::function<void(std::size_t epoch)> on_epoch;  // 1-based, after the epoch's last step
};

/// Mini-batch Adam over `data`. Per-epoch order comes from a generator seeded
/// by (seed, epoch); dropout masks from (seed, step). Gradients are averaged
/// over the batch, clipped by global norm, then applied.
template <typename T>
TrainResult train(model::Model<T>& m, num::AdamState<T>& adam, const std::vector<text::EncodedInstance>& data,
                  const TrainOptions& opt, const TrainHooks& hooks = {}) {
  if (data.empty()) throw InvalidInput("train: empty corpus");
  if (opt.batch == 0) throw ConfigError("train: batch size must be positive");
  if (!(opt.lr > 0.0)) throw ConfigError("train: learning rate must be positive");
  adam.config.lr = opt.lr;

  TrainResult res;
  double initial = 0.0, running = 0.0;
  std::size_t above = 0;
  std::vector<std::size_t> order(data.size());
  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    if (opt.shuffle) {
      Rng rng(derive_seed(opt.seed, 0x5348554646ULL + epoch));
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
      }
    }
    for (std::size_t start = 0; start < order.size(); start += opt.batch) {
      if (opt.max_steps != 0 && res.steps >= opt.max_steps) return res;
      const std::size_t end = std::min(order.size(), start + opt.batch);
      const T inv = T(1) / static_cast<T>(end - start);
      Rng dropout(derive_seed(opt.seed, (std::uint64_t{1} << 40) + res.steps));
      auto grads = m.params().zero_grads();
      StepLog entry;
      entry.step = res.steps + 1;
      double nll_sum = 0.0;
      std::size_t tokens = 0;
      for (std::size_t b = start; b < end; ++b) {
        num::Graph<T> g(true);
        auto loss = compute_loss(m, g, data[order[b]], &dropout,
                                 "step " + std::to_string(entry.step) + ", instance " + std::to_string(order[b]));
        g.backward(loss.total);
        g.accumulate_gradients(grads, inv);
        entry.loss += loss.breakdown.total / static_cast<double>(end - start);
        entry.stop_bce += loss.breakdown.stop_bce / static_cast<double>(end - start);
        nll_sum += loss.breakdown.nll_sum;
        tokens += loss.breakdown.token_count;
      }
      entry.nll = tokens ? nll_sum / static_cast<double>(tokens) : 0.0;
      entry.grad_norm = num::clip_global_norm(grads, opt.clip);
      num::adam_step(adam, m.params(), grads);

      if (res.steps == 0) {
        initial = entry.loss;
        running = entry.loss;
      } else {
        running = opt.running_decay * running + (1.0 - opt.running_decay) * entry.loss;
      }
      entry.running_avg_loss = running;
      ++res.steps;
      res.log.push_back(entry);
      if (hooks.on_step) hooks.on_step(entry);

      above = entry.loss > opt.divergence_factor * initial ? above + 1 : 0;
      if (opt.divergence_window != 0 && above >= opt.divergence_window) {
        res.diverged = true;
        return res;
      }
    }
    res.epochs_completed = epoch + 1;
    if (hooks.on_epoch) hooks.on_epoch(epoch + 1);
  }
  return res;
}

inline std::string format_loss_csv(const std::vector<StepLog>& log) {
  std::string out = "step,running_avg_loss,nll,stop_bce\n";
  char buf[128];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g\n", e.step, e.running_avg_loss, e.nll, e.stop_bce);
    out += buf;
  }
  return out;
}

inline void write_loss_csv(const std::string& path, const std::vector<StepLog>& log) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write loss log '" + path + "'");
  out << format_loss_csv(log);
}

}  // namespace hiersumm::train
