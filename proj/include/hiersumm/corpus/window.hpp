#pragma once

#include <cstddef>
#include <iterator>
#include <span>

#include "hiersumm/errors.hpp"

namespace hiersumm::corpus {

/// Sliding windows of length w advancing by t over a sequence:
/// floor((|X| - w) / t) + 1 windows, none when |X| < w.
template <typename T>
class Windows {
 public:
  Windows(std::span<const T> items, std::size_t w, std::size_t t) : items_(items), w_(w), t_(t) {
    if (w == 0 || t == 0) throw InvalidInput("window: size and stride must be positive");
  }

  std::size_t size() const { return items_.size() < w_ ? 0 : (items_.size() - w_) / t_ + 1; }

  std::span<const T> operator[](std::size_t i) const { return items_.subspan(i * t_, w_); }

  class iterator {
   public:
    using iterator_category = std::forward_iterator_tag;
    using value_type = std::span<const T>;
    using difference_type = std::ptrdiff_t;

    iterator() = default;
    iterator(const Windows* owner, std::size_t i) : owner_(owner), i_(i) {}
    value_type operator*() const { return (*owner_)[i_]; }
    iterator& operator++() {
      ++i_;
      return *this;
    }
    iterator operator++(int) {
      auto copy = *this;
      ++i_;
      return copy;
    }
    bool operator==(const iterator& o) const { return i_ == o.i_; }

   private:
    const Windows* owner_ = nullptr;
    std::size_t i_ = 0;
  };

  iterator begin() const { return iterator(this, 0); }
  iterator end() const { return iterator(this, size()); }

 private:
  std::span<const T> items_;
  std::size_t w_;
  std::size_t t_;
};

template <typename T>
Windows<T> window(std::span<const T> items, std::size_t w, std::size_t t) {
  return Windows<T>(items, w, t);
}

}  // namespace hiersumm::corpus
