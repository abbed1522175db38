// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "rts/nn/init.hpp"
#include "rts/nn/tensor.hpp"

namespace rts::nn {

// Causal 1-D convolution along time, stride 1, left padding of kernel-1
// zero frames. Input [length x in_channels] -> output [length x filters].
//
//   y[t, f] = b[f] + sum_{j<k} sum_c w[f, j, c] * x[t - (k-1) + j, c]
template <typename T>
class Conv1D {
 public:
  Conv1D() = default;
  Conv1D(std::size_t in_channels, std::size_t kernel, std::size_t filters)
      : in_(in_channels), kernel_(kernel), filters_(filters),
        weight_({filters, kernel, in_channels}), bias_({filters}) {
    if (kernel == 0) throw InvalidInput("conv1d: kernel must be positive");
  }

  std::size_t in_channels() const { return in_; }
  std::size_t kernel() const { return kernel_; }
  std::size_t filters() const { return filters_; }
  std::size_t parameter_count() const { return filters_ * kernel_ * in_ + filters_; }

  Tensor<T>& weight() { return weight_; }
  Tensor<T>& bias() { return bias_; }
  const Tensor<T>& weight() const { return weight_; }
  const Tensor<T>& bias() const { return bias_; }

  void init(Rng& rng, double gain = 1.0) {
    xavier_uniform(weight_, kernel_ * in_, kernel_ * filters_, rng, gain);
    bias_.fill(T{0});
  }

  Conv1D zeros_like() const { return Conv1D(in_, kernel_, filters_); }

  Tensor<T> forward(const Tensor<T>& x) const {
    if (x.rank() != 2 || x.cols() != in_)
      throw ShapeMismatch("conv1d: expected [L x " + std::to_string(in_) +
                          "], got " + x.shape_string());
    const std::size_t len = x.rows();
    Tensor<T> y({len, filters_});
    const T* w = weight_.data.data();
    for (std::size_t t = 0; t < len; ++t) {
      T* yt = &y(t, 0);
      for (std::size_t f = 0; f < filters_; ++f) yt[f] = bias_[f];
      for (std::size_t j = 0; j < kernel_; ++j) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + j) -
                                   static_cast<std::ptrdiff_t>(kernel_ - 1);
        if (src < 0) continue;
        const T* xs = &x(static_cast<std::size_t>(src), 0);
        for (std::size_t f = 0; f < filters_; ++f) {
          const T* wf = w + (f * kernel_ + j) * in_;
          T acc = T{0};
#pragma omp simd reduction(+ : acc)
          for (std::size_t c = 0; c < in_; ++c) acc += wf[c] * xs[c];
          yt[f] += acc;
        }
      }
    }
    return y;
  }

  // Accumulates into grad; returns dL/dx (skipped when want_dx is false).
  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& dy, Conv1D& grad,
                     bool want_dx = true) const {
    const std::size_t len = x.rows();
    require_shape(dy, {len, filters_}, "conv1d backward");
    Tensor<T> dx;
    if (want_dx) dx = Tensor<T>({len, in_});
    const T* w = weight_.data.data();
    T* gw = grad.weight_.data.data();
    for (std::size_t t = 0; t < len; ++t) {
      const T* dyt = &dy(t, 0);
      for (std::size_t f = 0; f < filters_; ++f) grad.bias_[f] += dyt[f];
      for (std::size_t j = 0; j < kernel_; ++j) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + j) -
                                   static_cast<std::ptrdiff_t>(kernel_ - 1);
        if (src < 0) continue;
        const std::size_t s = static_cast<std::size_t>(src);
        const T* xs = &x(s, 0);
        T* dxs = want_dx ? &dx(s, 0) : nullptr;
        for (std::size_t f = 0; f < filters_; ++f) {
          const T g = dyt[f];
          if (g == T{0}) continue;
          T* gwf = gw + (f * kernel_ + j) * in_;
#pragma omp simd
          for (std::size_t c = 0; c < in_; ++c) gwf[c] += g * xs[c];
          if (dxs) {
            const T* wf = w + (f * kernel_ + j) * in_;
#pragma omp simd
            for (std::size_t c = 0; c < in_; ++c) dxs[c] += g * wf[c];
          }
        }
      }
    }
    return dx;
  }

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".weight", weight_);
    f(prefix + ".bias", bias_);
  }

 private:
  std::size_t in_ = 0;
  std::size_t kernel_ = 0;
  std::size_t filters_ = 0;
  Tensor<T> weight_;
  Tensor<T> bias_;
};

}  // namespace rts::nn
