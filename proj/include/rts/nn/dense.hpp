// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>

#include "rts/nn/init.hpp"
#include "rts/nn/tensor.hpp"

namespace rts::nn {

// Fully connected layer: y = W x + b, W is [out x in].
template <typename T>
class Dense {
 public:
  Dense() = default;
  Dense(std::size_t in, std::size_t out)
      : in_(in), out_(out), weight_({out, in}), bias_({out}) {}

  std::size_t in_dim() const { return in_; }
  std::size_t out_dim() const { return out_; }
  std::size_t parameter_count() const { return out_ * in_ + out_; }

  Tensor<T>& weight() { return weight_; }
  Tensor<T>& bias() { return bias_; }
  const Tensor<T>& weight() const { return weight_; }
  const Tensor<T>& bias() const { return bias_; }

  void init(Rng& rng, double gain = 1.0) {
    xavier_uniform(weight_, in_, out_, rng, gain);
    bias_.fill(T{0});
  }

  Dense zeros_like() const { return Dense(in_, out_); }

  void forward_row(std::span<const T> x, std::span<T> y) const {
    if (x.size() != in_ || y.size() != out_)
      throw ShapeMismatch("dense: input " + std::to_string(x.size()) +
                          " vs in_dim " + std::to_string(in_));
    const T* w = weight_.data.data();
    for (std::size_t o = 0; o < out_; ++o) {
      T acc = bias_[o];
      const T* wr = w + o * in_;
#pragma omp simd reduction(+ : acc)
      for (std::size_t i = 0; i < in_; ++i) acc += wr[i] * x[i];
      y[o] = acc;
    }
  }

  // x: [n x in] -> [n x out]
  Tensor<T> forward(const Tensor<T>& x) const {
    if (x.rank() != 2 || x.cols() != in_)
      throw ShapeMismatch("dense: expected [n x " + std::to_string(in_) +
                          "], got " + x.shape_string());
    Tensor<T> y({x.rows(), out_});
    for (std::size_t r = 0; r < x.rows(); ++r) forward_row(x.row(r), y.row(r));
    return y;
  }

  // Accumulates parameter gradients into `grad`; writes dL/dx into dx if it
  // is non-empty.
  void backward_row(std::span<const T> x, std::span<const T> dy,
                    std::span<T> dx, Dense& grad) const {
    T* gw = grad.weight_.data.data();
    const T* w = weight_.data.data();
    if (!dx.empty()) std::fill(dx.begin(), dx.end(), T{0});
    for (std::size_t o = 0; o < out_; ++o) {
      const T g = dy[o];
      if (g == T{0}) continue;
      grad.bias_[o] += g;
      T* gwr = gw + o * in_;
#pragma omp simd
      for (std::size_t i = 0; i < in_; ++i) gwr[i] += g * x[i];
      if (!dx.empty()) {
        const T* wr = w + o * in_;
#pragma omp simd
        for (std::size_t i = 0; i < in_; ++i) dx[i] += g * wr[i];
      }
    }
  }

  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& dy, Dense& grad) const {
    require_shape(dy, {x.rows(), out_}, "dense backward");
    Tensor<T> dx({x.rows(), in_});
    for (std::size_t r = 0; r < x.rows(); ++r)
      backward_row(x.row(r), dy.row(r), dx.row(r), grad);
    return dx;
  }

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".weight", weight_);
    f(prefix + ".bias", bias_);
  }

 private:
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  Tensor<T> weight_;
  Tensor<T> bias_;
};

}  // namespace rts::nn
