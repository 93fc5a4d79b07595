#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "hiersumm/errors.hpp"

namespace hiersumm::num {

/// Dense row-major 2-D array. Vectors are 1 x n or n x 1.
template <typename T>
struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, T(0)) {}
  Tensor(std::size_t r, std::size_t c, std::vector<T> values)
      : rows(r), cols(c), data(std::move(values)) {
    if (data.size() != rows * cols) {
      throw DimensionError("tensor data size " + std::to_string(data.size()) +
                           " does not match shape " + std::to_string(rows) + "x" +
                           std::to_string(cols));
    }
  }

  std::size_t size() const noexcept { return data.size(); }
  T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// Parameter name -> flat gradient, same layout as the parameter's data.
template <typename T>
using GradTable = std::map<std::string, std::vector<T>>;

inline std::string shape_str(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace hiersumm::num
