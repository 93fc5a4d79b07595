#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hiersumm/errors.hpp"
#include "hiersumm/numcore/params.hpp"
#include "hiersumm/numcore/tensor.hpp"

namespace hiersumm::num {

template <typename T>
class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
template <typename T>
class Value {
 public:
  Value() = default;
  Value(Graph<T>* graph, std::size_t id) : graph_(graph), id_(id) {}

  bool valid() const noexcept { return graph_ != nullptr; }
  std::size_t id() const noexcept { return id_; }
  Graph<T>& graph() const { return *graph_; }

  std::size_t rows() const { return graph_->node(id_).rows; }
  std::size_t cols() const { return graph_->node(id_).cols; }
  std::size_t size() const { return rows() * cols(); }

  std::span<const T> data() const { return graph_->data(id_); }
  /// Empty until backward() has propagated into this node.
  std::span<const T> grad() const { return graph_->node(id_).grad; }

  T item() const {
    if (size() != 1) throw DimensionError("item() on a " + shape_str(rows(), cols()) + " value");
    return data()[0];
  }
  T at(std::size_t r, std::size_t c) const { return data()[r * cols() + c]; }

  Tensor<T> to_tensor() const {
    auto d = data();
    return Tensor<T>(rows(), cols(), std::vector<T>(d.begin(), d.end()));
  }

 private:
  Graph<T>* graph_ = nullptr;
  std::size_t id_ = 0;
};

/// Append-only tape of array nodes. Node ids are creation order, which is a
/// topological order, so backward() is a single reverse sweep.
///
/// A graph built with record=false stores no backward closures (inference).
template <typename T>
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::size_t)>;

  struct Node {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> owned;
    const T* external = nullptr;  // parameter leaves view the store directly
    std::vector<T> grad;
    bool requires_grad = false;
    BackwardFn backward;
    std::string param_name;
  };

  explicit Graph(bool record = true) : record_(record) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const noexcept { return record_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }

  const Node& node(std::size_t id) const { return nodes_[id]; }

  std::span<const T> data(std::size_t id) const {
    const Node& n = nodes_[id];
    if (n.external != nullptr) return {n.external, n.rows * n.cols};
    return n.owned;
  }

  bool needs_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Mutable gradient buffer, zero-initialised on first access.
  std::span<T> grad(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad.assign(n.rows * n.cols, T(0));
    return n.grad;
  }

  /// Leaf with no gradient.
  Value<T> constant(std::size_t rows, std::size_t cols, std::vector<T> values) {
    check_size(rows, cols, values.size());
    Node n;
    n.rows = rows;
    n.cols = cols;
    n.owned = std::move(values);
    return push(std::move(n));
  }

  Value<T> constant(const Tensor<T>& t) { return constant(t.rows, t.cols, t.data); }

  Value<T> zeros(std::size_t rows, std::size_t cols) {
    return constant(rows, cols, std::vector<T>(rows * cols, T(0)));
  }

  /// Leaf that receives a gradient (used to differentiate w.r.t. inputs).
  Value<T> variable(std::size_t rows, std::size_t cols, std::vector<T> values) {
    check_size(rows, cols, values.size());
    Node n;
    n.rows = rows;
    n.cols = cols;
    n.owned = std::move(values);
    n.requires_grad = record_;
    return push(std::move(n));
  }

  /// Leaf viewing a named parameter. Repeated calls return the same node, so
  /// every use of the parameter accumulates into one gradient.
  Value<T> param(const ParamStore<T>& store, const std::string& name) {
    if (auto it = param_ids_.find(name); it != param_ids_.end()) return Value<T>(this, it->second);
    const Tensor<T>& t = store.at(name);
    Node n;
    n.rows = t.rows;
    n.cols = t.cols;
    n.external = t.data.data();
    n.requires_grad = record_ && store.trainable(name);
    n.param_name = name;
    Value<T> v = push(std::move(n));
    param_ids_.emplace(name, v.id());
    return v;
  }

  /// Creates an op node. `fn` is dropped when no input needs a gradient.
  Value<T> emit(std::size_t rows, std::size_t cols, std::vector<T> values,
                std::initializer_list<Value<T>> inputs, BackwardFn fn) {
    check_size(rows, cols, values.size());
#ifndef NDEBUG
    bool inputs_finite = true;
    for (const auto& in : inputs) {
      for (T x : data(in.id())) {
        if (!std::isfinite(x)) inputs_finite = false;
      }
    }
    if (inputs_finite) {
      for (T x : values) {
        if (!std::isfinite(x)) throw NumericalError("non-finite value produced by a forward op");
      }
    }
#endif
    Node n;
    n.rows = rows;
    n.cols = cols;
    n.owned = std::move(values);
    bool any = false;
    for (const auto& in : inputs) any = any || nodes_[in.id()].requires_grad;
    if (record_ && any) {
      n.requires_grad = true;
      n.backward = std::move(fn);
    }
    return push(std::move(n));
  }

  /// Same as emit() for ops with a variable number of inputs.
  Value<T> emit_n(std::size_t rows, std::size_t cols, std::vector<T> values,
                  std::span<const Value<T>> inputs, BackwardFn fn) {
    check_size(rows, cols, values.size());
    Node n;
    n.rows = rows;
    n.cols = cols;
    n.owned = std::move(values);
    bool any = false;
    for (const auto& in : inputs) any = any || nodes_[in.id()].requires_grad;
    if (record_ && any) {
      n.requires_grad = true;
      n.backward = std::move(fn);
    }
    return push(std::move(n));
  }

  /// Reverse sweep from a scalar loss. Gradients accumulate additively, so
  /// calling backward twice on the same graph doubles them.
  void backward(Value<T> loss) {
    if (loss.size() != 1) {
      throw InvalidInput("backward() needs a scalar loss, got " +
                         shape_str(loss.rows(), loss.cols()));
    }
    if (!record_) throw InvalidInput("backward() on a graph built without recording");
    grad(loss.id())[0] += T(1);
    for (std::size_t id = loss.id() + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (n.grad.empty() || !n.backward) continue;
      n.backward(*this, id);
    }
  }

  /// Gradient of every parameter reached by backward(), keyed by name.
  GradTable<T> gradients() const {
    GradTable<T> out;
    for (const auto& [name, id] : param_ids_) {
      const Node& n = nodes_[id];
      if (!n.grad.empty()) out.emplace(name, n.grad);
    }
    return out;
  }

  /// Adds this graph's parameter gradients into `table` (creating entries).
  void accumulate_gradients(GradTable<T>& table, T scale = T(1)) const {
    for (const auto& [name, id] : param_ids_) {
      const Node& n = nodes_[id];
      if (n.grad.empty()) continue;
      auto& dst = table[name];
      if (dst.empty()) dst.assign(n.grad.size(), T(0));
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * n.grad[i];
    }
  }

 private:
  static void check_size(std::size_t rows, std::size_t cols, std::size_t n) {
    if (rows * cols != n) {
      throw DimensionError("node data size " + std::to_string(n) + " does not match shape " +
                           shape_str(rows, cols));
    }
  }

  Value<T> push(Node&& n) {
    nodes_.push_back(std::move(n));
    return Value<T>(this, nodes_.size() - 1);
  }

  bool record_;
  std::deque<Node> nodes_;
  std::unordered_map<std::string, std::size_t> param_ids_;
};

}  // namespace hiersumm::num
