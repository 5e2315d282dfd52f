#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace cssm {

// Dense row-major matrix. T may be a real or std::complex scalar.
template <typename T>
struct Matrix {
  std::size_t rows{0};
  std::size_t cols{0};
  std::vector<T> d;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), d(r * c, fill) {}

  T& at(std::size_t r, std::size_t c) { return d[r * cols + c]; }
  const T& at(std::size_t r, std::size_t c) const { return d[r * cols + c]; }
  T* row(std::size_t r) { return d.data() + r * cols; }
  const T* row(std::size_t r) const { return d.data() + r * cols; }
  std::size_t numel() const { return d.size(); }
  void fill(T v) { d.assign(d.size(), v); }
};

// Dense row-major rank-3 tensor, index order (i, j, k) with k contiguous.
// Feature cubes are stored as [M electrodes][F frequencies][T samples].
template <typename T>
struct Cube {
  std::size_t d0{0};
  std::size_t d1{0};
  std::size_t d2{0};
  std::vector<T> d;

  Cube() = default;
  Cube(std::size_t a, std::size_t b, std::size_t c, T fill = T{})
      : d0(a), d1(b), d2(c), d(a * b * c, fill) {}

  T& at(std::size_t i, std::size_t j, std::size_t k) { return d[(i * d1 + j) * d2 + k]; }
  const T& at(std::size_t i, std::size_t j, std::size_t k) const {
    return d[(i * d1 + j) * d2 + k];
  }
  T* row(std::size_t i, std::size_t j) { return d.data() + (i * d1 + j) * d2; }
  const T* row(std::size_t i, std::size_t j) const { return d.data() + (i * d1 + j) * d2; }
  std::size_t numel() const { return d.size(); }
  void fill(T v) { d.assign(d.size(), v); }
};

}  // namespace cssm
