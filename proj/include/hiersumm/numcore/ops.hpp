#pragma once

// Differentiable array ops. Every op validates shapes, computes its forward
// value eagerly and registers a backward closure that accumulates into the
// gradients of its inputs.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hiersumm/errors.hpp"
#include "hiersumm/numcore/graph.hpp"

namespace hiersumm::num {

namespace fault_injection {
/// Fault injection for the gradient checker's own tests: scales the sigmoid
/// backward rule by 1.5 while set.
inline thread_local bool corrupt_sigmoid_backward = false;
}  // namespace fault_injection

namespace detail {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
Eigen::Map<const RowMat<T>> cmap(const T* p, std::size_t r, std::size_t c) {
  return Eigen::Map<const RowMat<T>>(p, static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

template <typename T>
Eigen::Map<RowMat<T>> mmap(T* p, std::size_t r, std::size_t c) {
  return Eigen::Map<RowMat<T>>(p, static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

template <typename T>
void require_same_shape(const char* op, const Value<T>& a, const Value<T>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": lhs is " + shape_str(a.rows(), a.cols()) +
                         ", rhs is " + shape_str(b.rows(), b.cols()));
  }
}

template <typename T>
T stable_sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

}  // namespace detail

template <typename T>
Value<T> matmul(Value<T> a, Value<T> b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: lhs " + shape_str(a.rows(), a.cols()) + " cannot multiply rhs " +
                         shape_str(b.rows(), b.cols()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<T> out(m * n);
  detail::mmap(out.data(), m, n).noalias() =
      detail::cmap(a.data().data(), m, k) * detail::cmap(b.data().data(), k, n);
  const auto ia = a.id(), ib = b.id();
  return a.graph().emit(m, n, std::move(out), {a, b}, [ia, ib, m, k, n](Graph<T>& g, std::size_t self) {
    auto dy = detail::cmap(g.grad(self).data(), m, n);
    if (g.needs_grad(ia)) {
      detail::mmap(g.grad(ia).data(), m, k).noalias() +=
          dy * detail::cmap(g.data(ib).data(), k, n).transpose();
    }
    if (g.needs_grad(ib)) {
      detail::mmap(g.grad(ib).data(), k, n).noalias() +=
          detail::cmap(g.data(ia).data(), m, k).transpose() * dy;
    }
  });
}

/// x (b x in) . W (in x out) + bias (1 x out), bias broadcast over rows.
template <typename T>
Value<T> linear(Value<T> x, Value<T> w, Value<T> bias) {
  if (x.cols() != w.rows()) {
    throw DimensionError("linear: input " + shape_str(x.rows(), x.cols()) +
                         " does not match weight " + shape_str(w.rows(), w.cols()));
  }
  if (bias.rows() != 1 || bias.cols() != w.cols()) {
    throw DimensionError("linear: bias " + shape_str(bias.rows(), bias.cols()) +
                         " does not match weight " + shape_str(w.rows(), w.cols()));
  }
  const std::size_t b = x.rows(), in = x.cols(), out_dim = w.cols();
  std::vector<T> out(b * out_dim);
  auto y = detail::mmap(out.data(), b, out_dim);
  y.noalias() = detail::cmap(x.data().data(), b, in) * detail::cmap(w.data().data(), in, out_dim);
  y.rowwise() += detail::cmap(bias.data().data(), 1, out_dim).row(0);
  const auto ix = x.id(), iw = w.id(), ib = bias.id();
  return x.graph().emit(b, out_dim, std::move(out), {x, w, bias},
                        [ix, iw, ib, b, in, out_dim](Graph<T>& g, std::size_t self) {
                          auto dy = detail::cmap(g.grad(self).data(), b, out_dim);
                          if (g.needs_grad(ix)) {
                            detail::mmap(g.grad(ix).data(), b, in).noalias() +=
                                dy * detail::cmap(g.data(iw).data(), in, out_dim).transpose();
                          }
                          if (g.needs_grad(iw)) {
                            detail::mmap(g.grad(iw).data(), in, out_dim).noalias() +=
                                detail::cmap(g.data(ix).data(), b, in).transpose() * dy;
                          }
                          if (g.needs_grad(ib)) {
                            detail::mmap(g.grad(ib).data(), 1, out_dim) += dy.colwise().sum();
                          }
                        });
}

template <typename T>
Value<T> add(Value<T> a, Value<T> b) {
  detail::require_same_shape("add", a, b);
  auto da = a.data(), db = b.data();
  std::vector<T> out(da.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] + db[i];
  const auto ia = a.id(), ib = b.id();
  return a.graph().emit(a.rows(), a.cols(), std::move(out), {a, b}, [ia, ib](Graph<T>& g, std::size_t self) {
    auto dy = g.grad(self);
    for (auto id : {ia, ib}) {
      if (!g.needs_grad(id)) continue;
      auto dx = g.grad(id);
      for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
    }
  });
}

template <typename T>
Value<T> sub(Value<T> a, Value<T> b) {
  detail::require_same_shape("sub", a, b);
  auto da = a.data(), db = b.data();
  std::vector<T> out(da.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] - db[i];
  const auto ia = a.id(), ib = b.id();
  return a.graph().emit(a.rows(), a.cols(), std::move(out), {a, b}, [ia, ib](Graph<T>& g, std::size_t self) {
    auto dy = g.grad(self);
    if (g.needs_grad(ia)) {
      auto dx = g.grad(ia);
      for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
    }
    if (g.needs_grad(ib)) {
      auto dx = g.grad(ib);
      for (std::size_t i = 0; i < dy.size(); ++i) dx[i] -= dy[i];
    }
  });
}

/// Elementwise product.
template <typename T>
Value<T> mul(Value<T> a, Value<T> b) {
  detail::require_same_shape("mul", a, b);
  auto da = a.data(), db = b.data();
  std::vector<T> out(da.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] * db[i];
  const auto ia = a.id(), ib = b.id();
  return a.graph().emit(a.rows(), a.cols(), std::move(out), {a, b}, [ia, ib](Graph<T>& g, std::size_t self) {
    auto dy = g.grad(self);
    auto xa = g.data(ia), xb = g.data(ib);
    if (g.needs_grad(ia)) {
      auto dx = g.grad(ia);
      for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * xb[i];
    }
    if (g.needs_grad(ib)) {
      auto dx = g.grad(ib);
      for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * xa[i];
    }
  });
}

template <typename T>
Value<T> scale(Value<T> a, T s) {
  auto da = a.data();
  std::vector<T> out(da.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * da[i];
  const auto ia = a.id();
  return a.graph().emit(a.rows(), a.cols(), std::move(out), {a}, [ia, s](Graph<T>& g, std::size_t self) {
    auto dy = g.grad(self);
    auto dx = g.grad(ia);
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += s * dy[i];
  });
}

/// Multiplies by a constant array (dropout masks, fixed weights).
template <typename T>
Value<T> mul_const(Value<T> a, std::vector<T> factors) {
  if (factors.size() != a.size()) {
    throw DimensionError("mul_const: " + std::to_string(factors.size()) + " factors for a " +
                         shape_str(a.rows(), a.cols()) + " value");
  }
  auto da = a.data();
  std::vector<T> out(da.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = factors[i] * da[i];
  const auto ia = a.id();
  return a.graph().emit(a.rows(), a.cols(), std::move(out), {a},
                        [ia, f = std::move(factors)](Graph<T>& g, std::size_t self) {
                          auto dy = g.grad(self);
                          auto dx = g.grad(ia);
                          for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += f[i] * dy[i];
                        });
}

/// a (r x c) + row vector v (1 x c) broadcast over rows.
template <typename T>
Value<T> add_rowvec(Value<T> a, Value<T> v) {
  if (v.rows() != 1 || v.cols() != a.cols()) {
    throw DimensionError("add_rowvec: row vector " + shape_str(v.rows(), v.cols()) +
                         " does not broadcast over " + shape_str(a.rows(), a.cols()));
  }
  const std::size_t r = a.rows(), c = a.cols();
  auto da = a.data(), dv = v.data();
  std::vector<T> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = da[i * c + j] + dv[j];
  const auto ia = a.id(), iv = v.id();
  return a.graph().emit(r, c, std::move(out), {a, v}, [ia, iv, r, c](Graph<T>& g, std::size_t self) {
    auto dy = g.grad(self);
    if (g.needs_grad(ia)) {
      auto dx = g.grad(ia);
      for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
    }
    if (g.needs_grad(iv)) {
      auto dv = g.grad(iv);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) dv[j] += dy[i * c + j];
    }
  });
}

template <typename T>
Value<T> sigmoid(Value<T> a) {
  auto da = a.data();
  std::vector<T> out(da.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = detail::stable_sigmoid(da[i]);
  const auto ia = a.id();
  return a.graph().emit(a.rows(), a.cols(), std::move(out), {a}, [ia](Graph<T>& g, std::size_t self) {
    auto dy = g.grad(self);
    auto y = g.data(self);
    auto dx = g.grad(ia);
    const T k = fault_injection::corrupt_sigmoid_backward ? T(1.5) : T(1);
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += k * dy[i] * y[i] * (T(1) - y[i]);
  });
}

template <typename T>
Value<T> tanh(Value<T> a) {
  auto da = a.data();
  std::vector<T> out(da.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(da[i]);
  const auto ia = a.id();
  return a.graph().emit(a.rows(), a.cols(), std::move(out), {a}, [ia](Graph<T>& g, std::size_t self) {
    auto dy = g.grad(self);
    auto y = g.data(self);
    auto dx = g.grad(ia);
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * (T(1) - y[i] * y[i]);
  });
}

/// Horizontal concatenation; all parts share a row count.
template <typename T>
Value<T> concat_cols(std::span<const Value<T>> parts) {
  if (parts.empty()) throw InvalidInput("concat_cols: no operands");
  const std::size_t r = parts[0].rows();
  std::size_t c = 0;
  std::vector<std::size_t> ids, widths;
  for (const auto& p : parts) {
    if (p.rows() != r) {
      throw DimensionError("concat_cols: operand " + std::to_string(ids.size()) + " has " +
                           std::to_string(p.rows()) + " rows, expected " + std::to_string(r));
    }
    ids.push_back(p.id());
    widths.push_back(p.cols());
    c += p.cols();
  }
  std::vector<T> out(r * c);
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto d = parts[k].data();
    const std::size_t w = widths[k];
    for (std::size_t i = 0; i < r; ++i) std::copy_n(d.data() + i * w, w, out.data() + i * c + off);
    off += w;
  }
  return parts[0].graph().emit_n(
      r, c, std::move(out), parts,
      [ids = std::move(ids), widths = std::move(widths), r, c](Graph<T>& g, std::size_t self) {
        auto dy = g.grad(self);
        std::size_t off = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
          const std::size_t w = widths[k];
          if (g.needs_grad(ids[k])) {
            auto dx = g.grad(ids[k]);
            for (std::size_t i = 0; i < r; ++i)
              for (std::size_t j = 0; j < w; ++j) dx[i * w + j] += dy[i * c + off + j];
          }
          off += w;
        }
      });
}

template <typename T>
Value<T> concat_cols(std::initializer_list<Value<T>> parts) {
  return concat_cols(std::span<const Value<T>>(parts.begin(), parts.size()));
}

template <typename T>
Value<T> concat_cols(const std::vector<Value<T>>& parts) {
  return concat_cols(std::span<const Value<T>>(parts));
}

/// Vertical concatenation; all parts share a column count.
template <typename T>
Value<T> concat_rows(std::span<const Value<T>> parts) {
  if (parts.empty()) throw InvalidInput("concat_rows: no operands");
  const std::size_t c = parts[0].cols();
  std::size_t r = 0;
  std::vector<std::size_t> ids, offsets;
  for (const auto& p : parts) {
    if (p.cols() != c) {
      throw DimensionError("concat_rows: operand " + std::to_string(ids.size()) + " has " +
                           std::to_string(p.cols()) + " cols, expected " + std::to_string(c));
    }
    ids.push_back(p.id());
    offsets.push_back(r * c);
    r += p.rows();
  }
  std::vector<T> out;
  out.reserve(r * c);
  for (const auto& p : parts) {
    auto d = p.data();
    out.insert(out.end(), d.begin(), d.end());
  }
  return parts[0].graph().emit_n(r, c, std::move(out), parts,
                                 [ids = std::move(ids), offsets = std::move(offsets)](Graph<T>& g, std::size_t self) {
                                   auto dy = g.grad(self);
                                   for (std::size_t k = 0; k < ids.size(); ++k) {
                                     if (!g.needs_grad(ids[k])) continue;
                                     auto dx = g.grad(ids[k]);
                                     for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[offsets[k] + i];
                                   }
                                 });
}

template <typename T>
Value<T> concat_rows(const std::vector<Value<T>>& parts) {
  return concat_rows(std::span<const Value<T>>(parts));
}

/// Stacks T matrices of shape (n x c) into (n*T x c) with output row
/// i*T + t taken from row i of parts[t] (sequence-major layout).
template <typename T>
Value<T> interleave_rows(std::span<const Value<T>> parts) {
  if (parts.empty()) throw InvalidInput("interleave_rows: no operands");
  const std::size_t n = parts[0].rows(), c = parts[0].cols(), steps = parts.size();
  std::vector<std::size_t> ids;
  for (const auto& p : parts) {
    if (p.rows() != n || p.cols() != c) {
      throw DimensionError("interleave_rows: operand " + std::to_string(ids.size()) + " is " +
                           shape_str(p.rows(), p.cols()) + ", expected " + shape_str(n, c));
    }
    ids.push_back(p.id());
  }
  std::vector<T> out(n * steps * c);
  for (std::size_t t = 0; t < steps; ++t) {
    auto d = parts[t].data();
    for (std::size_t i = 0; i < n; ++i) std::copy_n(d.data() + i * c, c, out.data() + (i * steps + t) * c);
  }
  return parts[0].graph().emit_n(n * steps, c, std::move(out), parts,
                                 [ids = std::move(ids), n, c, steps](Graph<T>& g, std::size_t self) {
                                   auto dy = g.grad(self);
                                   for (std::size_t t = 0; t < steps; ++t) {
                                     if (!g.needs_grad(ids[t])) continue;
                                     auto dx = g.grad(ids[t]);
                                     for (std::size_t i = 0; i < n; ++i)
                                       for (std::size_t j = 0; j < c; ++j) dx[i * c + j] += dy[(i * steps + t) * c + j];
                                   }
                                 });
}

template <typename T>
Value<T> slice_cols(Value<T> a, std::size_t start, std::size_t len) {
  if (start + len > a.cols() || len == 0) {
    throw DimensionError("slice_cols: [" + std::to_string(start) + ", " + std::to_string(start + len) +
                         ") out of range for " + shape_str(a.rows(), a.cols()));
  }
  const std::size_t r = a.rows(), c = a.cols();
  auto d = a.data();
  std::vector<T> out(r * len);
  for (std::size_t i = 0; i < r; ++i) std::copy_n(d.data() + i * c + start, len, out.data() + i * len);
  const auto ia = a.id();
  return a.graph().emit(r, len, std::move(out), {a}, [ia, r, c, start, len](Graph<T>& g, std::size_t self) {
    auto dy = g.grad(self);
    auto dx = g.grad(ia);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < len; ++j) dx[i * c + start + j] += dy[i * len + j];
  });
}

template <typename T>
Value<T> slice_rows(Value<T> a, std::size_t start, std::size_t len) {
  if (start + len > a.rows() || len == 0) {
    throw DimensionError("slice_rows: [" + std::to_string(start) + ", " + std::to_string(start + len) +
                         ") out of range for " + shape_str(a.rows(), a.cols()));
  }
  const std::size_t c = a.cols();
  auto d = a.data();
  std::vector<T> out(d.begin() + static_cast<std::ptrdiff_t>(start * c),
                     d.begin() + static_cast<std::ptrdiff_t>((start + len) * c));
  const auto ia = a.id();
  return a.graph().emit(len, c, std::move(out), {a}, [ia, start, c](Graph<T>& g, std::size_t self) {
    auto dy = g.grad(self);
    auto dx = g.grad(ia);
    for (std::size_t i = 0; i < dy.size(); ++i) dx[start * c + i] += dy[i];
  });
}

/// Embedding lookup: row ids[k] of `table` becomes output row k.
template <typename T>
Value<T> gather_rows(Value<T> table, std::vector<int> ids) {
  const std::size_t c = table.cols();
  auto d = table.data();
  std::vector<T> out(ids.size() * c);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (ids[k] < 0 || static_cast<std::size_t>(ids[k]) >= table.rows()) {
      throw InvalidInput("gather_rows: id " + std::to_string(ids[k]) + " outside table of " +
                         std::to_string(table.rows()) + " rows");
    }
    std::copy_n(d.data() + static_cast<std::size_t>(ids[k]) * c, c, out.data() + k * c);
  }
  const auto it = table.id();
  const std::size_t n = ids.size();
  return table.graph().emit(n, c, std::move(out), {table}, [it, c, ids = std::move(ids)](Graph<T>& g, std::size_t self) {
    auto dy = g.grad(self);
    auto dx = g.grad(it);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const std::size_t row = static_cast<std::size_t>(ids[k]);
      for (std::size_t j = 0; j < c; ++j) dx[row * c + j] += dy[k * c + j];
    }
  });
}

/// Row i of `a` repeated `times` times consecutively: (n x c) -> (n*times x c).
template <typename T>
Value<T> repeat_rows(Value<T> a, std::size_t times) {
  if (times == 0) throw InvalidInput("repeat_rows: times must be positive");
  const std::size_t n = a.rows(), c = a.cols();
  auto d = a.data();
  std::vector<T> out(n * times * c);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < times; ++t) std::copy_n(d.data() + i * c, c, out.data() + (i * times + t) * c);
  const auto ia = a.id();
  return a.graph().emit(n * times, c, std::move(out), {a}, [ia, n, c, times](Graph<T>& g, std::size_t self) {
    auto dy = g.grad(self);
    auto dx = g.grad(ia);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t t = 0; t < times; ++t)
        for (std::size_t j = 0; j < c; ++j) dx[i * c + j] += dy[(i * times + t) * c + j];
  });
}

template <typename T>
Value<T> sum(Value<T> a) {
  T s = T(0);
  for (T x : a.data()) s += x;
  const auto ia = a.id();
  return a.graph().emit(1, 1, {s}, {a}, [ia](Graph<T>& g, std::size_t self) {
    const T dy = g.grad(self)[0];
    for (auto& dx : g.grad(ia)) dx += dy;
  });
}

/// Sums a list of 1x1 values.
template <typename T>
Value<T> add_scalars(std::span<const Value<T>> xs) {
  if (xs.empty()) throw InvalidInput("add_scalars: no operands");
  T s = T(0);
  std::vector<std::size_t> ids;
  for (const auto& x : xs) {
    if (x.size() != 1) throw DimensionError("add_scalars: operand is " + shape_str(x.rows(), x.cols()));
    s += x.data()[0];
    ids.push_back(x.id());
  }
  return xs[0].graph().emit_n(1, 1, {s}, xs, [ids = std::move(ids)](Graph<T>& g, std::size_t self) {
    const T dy = g.grad(self)[0];
    for (auto id : ids) {
      if (g.needs_grad(id)) g.grad(id)[0] += dy;
    }
  });
}

/// Zeros the entries where mask is false; those entries pass no gradient.
template <typename T>
Value<T> mask_zero(Value<T> a, const std::vector<bool>& mask) {
  if (mask.size() != a.size()) {
    throw DimensionError("mask_zero: mask of " + std::to_string(mask.size()) + " for a " +
                         shape_str(a.rows(), a.cols()) + " value");
  }
  std::vector<T> f(mask.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = mask[i] ? T(1) : T(0);
  return mul_const(a, std::move(f));
}

/// Per-row select: row b is `fresh` where keep[b] is true, else `held`.
/// Frozen recurrent state across padding steps.
template <typename T>
Value<T> blend_rows(Value<T> fresh, Value<T> held, const std::vector<bool>& keep) {
  detail::require_same_shape("blend_rows", fresh, held);
  if (keep.size() != fresh.rows()) {
    throw DimensionError("blend_rows: mask of " + std::to_string(keep.size()) + " for " +
                         std::to_string(fresh.rows()) + " rows");
  }
  const std::size_t r = fresh.rows(), c = fresh.cols();
  auto df = fresh.data(), dh = held.data();
  std::vector<T> out(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    const auto& src = keep[i] ? df : dh;
    std::copy_n(src.data() + i * c, c, out.data() + i * c);
  }
  const auto i_f = fresh.id(), i_h = held.id();
  return fresh.graph().emit(r, c, std::move(out), {fresh, held}, [i_f, i_h, r, c, keep](Graph<T>& g, std::size_t self) {
    auto dy = g.grad(self);
    for (std::size_t i = 0; i < r; ++i) {
      const auto id = keep[i] ? i_f : i_h;
      if (!g.needs_grad(id)) continue;
      auto dx = g.grad(id);
      for (std::size_t j = 0; j < c; ++j) dx[i * c + j] += dy[i * c + j];
    }
  });
}

/// Mean over the rows of `a` whose mask entry is true -> (1 x c).
template <typename T>
Value<T> mean_rows_masked(Value<T> a, const std::vector<bool>& mask) {
  if (mask.size() != a.rows()) {
    throw DimensionError("mean_rows_masked: mask of " + std::to_string(mask.size()) + " for " +
                         std::to_string(a.rows()) + " rows");
  }
  const std::size_t r = a.rows(), c = a.cols();
  std::size_t count = 0;
  for (bool m : mask) count += m ? 1 : 0;
  if (count == 0) throw InvalidInput("mean pooling over a sequence whose positions are all masked");
  const T inv = T(1) / static_cast<T>(count);
  auto d = a.data();
  std::vector<T> out(c, T(0));
  for (std::size_t i = 0; i < r; ++i) {
    if (!mask[i]) continue;
    for (std::size_t j = 0; j < c; ++j) out[j] += d[i * c + j];
  }
  for (auto& x : out) x *= inv;
  const auto ia = a.id();
  return a.graph().emit(1, c, std::move(out), {a}, [ia, r, c, inv, mask](Graph<T>& g, std::size_t self) {
    auto dy = g.grad(self);
    auto dx = g.grad(ia);
    for (std::size_t i = 0; i < r; ++i) {
      if (!mask[i]) continue;
      for (std::size_t j = 0; j < c; ++j) dx[i * c + j] += inv * dy[j];
    }
  });
}

/// Grouped masked mean: `a` is (n*group x c); output row i is the mean of
/// the unmasked rows i*group .. i*group+group-1, or zeros if none is unmasked.
template <typename T>
Value<T> mean_rows_grouped(Value<T> a, std::size_t group, const std::vector<bool>& mask) {
  if (group == 0 || a.rows() % group != 0 || mask.size() != a.rows()) {
    throw DimensionError("mean_rows_grouped: " + std::to_string(a.rows()) + " rows, group " +
                         std::to_string(group) + ", mask " + std::to_string(mask.size()));
  }
  const std::size_t n = a.rows() / group, c = a.cols();
  std::vector<T> inv(n, T(0));
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t count = 0;
    for (std::size_t t = 0; t < group; ++t) count += mask[i * group + t] ? 1 : 0;
    if (count > 0) inv[i] = T(1) / static_cast<T>(count);
  }
  auto d = a.data();
  std::vector<T> out(n * c, T(0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < group; ++t) {
      if (!mask[i * group + t]) continue;
      for (std::size_t j = 0; j < c; ++j) out[i * c + j] += d[(i * group + t) * c + j];
    }
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] *= inv[i];
  }
  const auto ia = a.id();
  return a.graph().emit(n, c, std::move(out), {a},
                        [ia, n, c, group, mask, inv = std::move(inv)](Graph<T>& g, std::size_t self) {
                          auto dy = g.grad(self);
                          auto dx = g.grad(ia);
                          for (std::size_t i = 0; i < n; ++i)
                            for (std::size_t t = 0; t < group; ++t) {
                              if (!mask[i * group + t]) continue;
                              for (std::size_t j = 0; j < c; ++j) dx[(i * group + t) * c + j] += inv[i] * dy[i * c + j];
                            }
                        });
}

/// Softmax over the unmasked entries of a vector-shaped value (any shape is
/// treated as flat). Masked entries are exactly 0 and receive no gradient.
template <typename T>
Value<T> softmax_masked(Value<T> scores, const std::vector<bool>& mask) {
  if (mask.size() != scores.size()) {
    throw DimensionError("softmax_masked: mask of " + std::to_string(mask.size()) + " for " +
                         std::to_string(scores.size()) + " scores");
  }
  auto s = scores.data();
  T mx = -std::numeric_limits<T>::infinity();
  for (std::size_t i = 0; i < s.size(); ++i)
    if (mask[i]) mx = std::max(mx, s[i]);
  if (mx == -std::numeric_limits<T>::infinity()) {
    throw InvalidInput("softmax_masked: every position is masked");
  }
  std::vector<T> out(s.size(), T(0));
  T z = T(0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!mask[i]) continue;
    out[i] = std::exp(s[i] - mx);
    z += out[i];
  }
  for (auto& x : out) x /= z;
  const auto is = scores.id();
  return scores.graph().emit(scores.rows(), scores.cols(), std::move(out), {scores}, [is](Graph<T>& g, std::size_t self) {
    auto dy = g.grad(self);
    auto y = g.data(self);
    T dot = T(0);
    for (std::size_t i = 0; i < y.size(); ++i) dot += y[i] * dy[i];
    auto dx = g.grad(is);
    for (std::size_t i = 0; i < y.size(); ++i) dx[i] += y[i] * (dy[i] - dot);
  });
}

/// w (N x 1) and x (N x c) -> sum_i w_i x_i as (1 x c).
template <typename T>
Value<T> weighted_sum_rows(Value<T> w, Value<T> x) {
  if (w.size() != x.rows()) {
    throw DimensionError("weighted_sum_rows: " + std::to_string(w.size()) + " weights for " +
                         std::to_string(x.rows()) + " rows");
  }
  const std::size_t n = x.rows(), c = x.cols();
  std::vector<T> out(c);
  detail::mmap(out.data(), 1, c).noalias() =
      detail::cmap(w.data().data(), 1, n) * detail::cmap(x.data().data(), n, c);
  const auto iw = w.id(), ix = x.id();
  return w.graph().emit(1, c, std::move(out), {w, x}, [iw, ix, n, c](Graph<T>& g, std::size_t self) {
    auto dy = detail::cmap(g.grad(self).data(), 1, c);
    if (g.needs_grad(iw)) {
      detail::mmap(g.grad(iw).data(), 1, n).noalias() +=
          dy * detail::cmap(g.data(ix).data(), n, c).transpose();
    }
    if (g.needs_grad(ix)) {
      detail::mmap(g.grad(ix).data(), n, c).noalias() +=
          detail::cmap(g.data(iw).data(), 1, n).transpose() * dy;
    }
  });
}

/// Sum over rows r of -log softmax(logits[r])[targets[r]]; rows whose target
/// is negative are skipped. Returns a 1x1 value.
template <typename T>
Value<T> cross_entropy_logits(Value<T> logits, std::vector<int> targets) {
  if (targets.size() != logits.rows()) {
    throw DimensionError("cross_entropy_logits: " + std::to_string(targets.size()) + " targets for " +
                         std::to_string(logits.rows()) + " rows");
  }
  const std::size_t n = logits.rows(), v = logits.cols();
  auto d = logits.data();
  std::vector<T> probs(n * v, T(0));
  T loss = T(0);
  for (std::size_t r = 0; r < n; ++r) {
    if (targets[r] < 0) continue;
    if (static_cast<std::size_t>(targets[r]) >= v) {
      throw InvalidInput("cross_entropy_logits: target " + std::to_string(targets[r]) + " >= vocab " +
                         std::to_string(v));
    }
    const T* row = d.data() + r * v;
    const T mx = *std::max_element(row, row + v);
    T z = T(0);
    for (std::size_t j = 0; j < v; ++j) {
      probs[r * v + j] = std::exp(row[j] - mx);
      z += probs[r * v + j];
    }
    for (std::size_t j = 0; j < v; ++j) probs[r * v + j] /= z;
    loss += std::log(z) + mx - row[targets[r]];
  }
  const auto il = logits.id();
  return logits.graph().emit(1, 1, {loss}, {logits},
                             [il, n, v, targets = std::move(targets), probs = std::move(probs)](Graph<T>& g, std::size_t self) {
                               const T dy = g.grad(self)[0];
                               auto dx = g.grad(il);
                               for (std::size_t r = 0; r < n; ++r) {
                                 if (targets[r] < 0) continue;
                                 for (std::size_t j = 0; j < v; ++j) dx[r * v + j] += dy * probs[r * v + j];
                                 dx[r * v + static_cast<std::size_t>(targets[r])] -= dy;
                               }
                             });
}

/// Sum of binary cross-entropies of sigmoid(logits) against labels in [0,1],
/// computed from the logits: softplus(z) - y*z.
template <typename T>
Value<T> bce_with_logits(Value<T> logits, std::vector<T> labels) {
  if (labels.size() != logits.size()) {
    throw DimensionError("bce_with_logits: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(logits.size()) + " logits");
  }
  auto z = logits.data();
  T loss = T(0);
  for (std::size_t i = 0; i < z.size(); ++i) {
    const T softplus = std::max(z[i], T(0)) + std::log1p(std::exp(-std::abs(z[i])));
    loss += softplus - labels[i] * z[i];
  }
  const auto il = logits.id();
  return logits.graph().emit(1, 1, {loss}, {logits}, [il, labels = std::move(labels)](Graph<T>& g, std::size_t self) {
    const T dy = g.grad(self)[0];
    auto z = g.data(il);
    auto dx = g.grad(il);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy * (detail::stable_sigmoid(z[i]) - labels[i]);
  });
}

}  // namespace hiersumm::num
