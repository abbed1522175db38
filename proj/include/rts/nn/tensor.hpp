// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rts/common.hpp"

namespace rts::nn {

// Dense row-major tensor. Rank is whatever the shape says; most kernels use
// rank 1 (vectors) or rank 2 ([rows x cols]).
template <typename T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims, T fill = T{0})
      : shape(std::move(dims)), data(element_count(shape), fill) {}

  static std::size_t element_count(const std::vector<std::size_t>& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                           std::multiplies<>());
  }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }
  std::size_t rows() const { return shape.at(0); }
  std::size_t cols() const { return shape.size() > 1 ? shape[1] : 1; }

  T& operator[](std::size_t i) { return data[i]; }
  const T& operator[](std::size_t i) const { return data[i]; }
  T& operator()(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return data[r * shape[1] + c];
  }

  std::span<T> row(std::size_t r) {
    const std::size_t c = cols();
    return {data.data() + r * c, c};
  }
  std::span<const T> row(std::size_t r) const {
    const std::size_t c = cols();
    return {data.data() + r * c, c};
  }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }
  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool all_finite() const {
    for (const T& v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  std::string shape_string() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) s += "x";
      s += std::to_string(shape[i]);
    }
    return s + "]";
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.assign(data.begin(), data.end());
    return out;
  }
};

template <typename T>
void require_shape(const Tensor<T>& t, const std::vector<std::size_t>& dims,
                   const char* what) {
  if (t.shape != dims) {
    Tensor<T> expect;
    expect.shape = dims;
    throw ShapeMismatch(std::string(what) + ": expected " +
                        expect.shape_string() + ", got " + t.shape_string());
  }
}

inline void relu_inplace(std::span<float> x) {
  for (float& v : x) v = v > 0.0f ? v : 0.0f;
}

// dy *= 1[y > 0], where y is the post-activation value.
inline void relu_backward_inplace(std::span<float> dy, std::span<const float> y) {
  for (std::size_t i = 0; i < dy.size(); ++i)
    if (y[i] <= 0.0f) dy[i] = 0.0f;
}

}  // namespace rts::nn
