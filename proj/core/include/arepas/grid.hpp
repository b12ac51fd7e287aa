#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "arepas/error.hpp"

namespace arepas {

/// Dense row-major 2D array. All image-like data in the library is a Grid.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(checked_size(rows, cols), fill) {}
  Grid(int rows, int cols, std::vector<T> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != checked_size(rows, cols)) {
      throw Error(ErrorCode::kShapeMismatch, "grid data size does not match shape");
    }
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool square() const noexcept { return rows_ == cols_; }

  T& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  const T& operator()(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  bool contains(int r, int c) const noexcept { return r >= 0 && c >= 0 && r < rows_ && c < cols_; }

  template <typename U>
  bool same_shape(const Grid<U>& other) const noexcept {
    return rows_ == other.rows() && cols_ == other.cols();
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  bool operator==(const Grid&) const = default;

 private:
  static std::size_t checked_size(int rows, int cols) {
    if (rows < 0 || cols < 0) throw Error(ErrorCode::kInvalidArgument, "negative grid shape");
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

using Mask = Grid<std::uint8_t>;
using RealGrid = Grid<double>;

template <typename A, typename B>
void require_same_shape(const Grid<A>& a, const Grid<B>& b, const char* what) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::kShapeMismatch,
                std::string(what) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                    std::to_string(b.cols()) + ")");
  }
}

inline std::size_t count_nonzero(const Mask& m) {
  std::size_t n = 0;
  for (auto v : m) n += v != 0;
  return n;
}

}  // namespace arepas
