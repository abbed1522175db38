// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "rts/nn/init.hpp"
#include "rts/nn/tensor.hpp"

namespace rts::nn {

// Single-layer GRU with separate input and recurrent biases. Rows of the
// 3h-sized blocks are ordered reset, update, candidate:
//
//   r  = sigmoid(W_ir x + b_ir + W_hr h + b_hr)
//   z  = sigmoid(W_iz x + b_iz + W_hz h + b_hz)
//   n  = tanh(W_in x + b_in + r * (W_hn h + b_hn))
//   h' = (1 - z) * n + z * h
template <typename T>
class GRU {
 public:
  // Per-step activations kept for backpropagation through time.
  struct Cache {
    std::size_t steps = 0;
    std::vector<T> x;       // [steps x in]
    std::vector<T> h_prev;  // [steps x hidden]
    std::vector<T> r, z, n, hn;  // [steps x hidden]; hn = W_hn h + b_hn
  };

  GRU() = default;
  GRU(std::size_t in, std::size_t hidden)
      : in_(in), hidden_(hidden), w_ih_({3 * hidden, in}),
        w_hh_({3 * hidden, hidden}), b_ih_({3 * hidden}), b_hh_({3 * hidden}) {}

  std::size_t in_dim() const { return in_; }
  std::size_t hidden_dim() const { return hidden_; }
  std::size_t parameter_count() const {
    return 3 * hidden_ * in_ + 3 * hidden_ * hidden_ + 6 * hidden_;
  }

  Tensor<T>& w_ih() { return w_ih_; }
  Tensor<T>& w_hh() { return w_hh_; }
  Tensor<T>& b_ih() { return b_ih_; }
  Tensor<T>& b_hh() { return b_hh_; }
  const Tensor<T>& w_ih() const { return w_ih_; }
  const Tensor<T>& w_hh() const { return w_hh_; }
  const Tensor<T>& b_ih() const { return b_ih_; }
  const Tensor<T>& b_hh() const { return b_hh_; }

  void init(Rng& rng) {
    xavier_uniform(w_ih_, in_, 3 * hidden_, rng);
    xavier_uniform(w_hh_, hidden_, 3 * hidden_, rng);
    b_ih_.fill(T{0});
    b_hh_.fill(T{0});
  }

  GRU zeros_like() const { return GRU(in_, hidden_); }

  // One streaming step. h is updated in place. Optional cache slot receives
  // the intermediate activations.
  void step(std::span<const T> x, std::span<T> h, Cache* cache = nullptr) const {
    if (x.size() != in_ || h.size() != hidden_)
      throw ShapeMismatch("gru step: input " + std::to_string(x.size()) +
                          "/hidden " + std::to_string(h.size()) +
                          " vs layer " + std::to_string(in_) + "/" +
                          std::to_string(hidden_));
    const std::size_t H = hidden_;
    thread_local std::vector<T> gi, gh;
    gi.resize(3 * H);
    gh.resize(3 * H);
    matvec(w_ih_, b_ih_, x, gi);
    matvec(w_hh_, b_hh_, std::span<const T>(h.data(), H), gh);

    std::size_t base = 0;
    if (cache) {
      base = cache->steps++;
      cache->x.insert(cache->x.end(), x.begin(), x.end());
      cache->h_prev.insert(cache->h_prev.end(), h.begin(), h.end());
      cache->r.resize((base + 1) * H);
      cache->z.resize((base + 1) * H);
      cache->n.resize((base + 1) * H);
      cache->hn.resize((base + 1) * H);
    }
    for (std::size_t k = 0; k < H; ++k) {
      const T r = sigmoid(gi[k] + gh[k]);
      const T z = sigmoid(gi[H + k] + gh[H + k]);
      const T hn = gh[2 * H + k];
      const T n = std::tanh(gi[2 * H + k] + r * hn);
      const T hp = h[k];
      h[k] = (T{1} - z) * n + z * hp;
      if (cache) {
        cache->r[base * H + k] = r;
        cache->z[base * H + k] = z;
        cache->n[base * H + k] = n;
        cache->hn[base * H + k] = hn;
      }
    }
  }

  // x: [steps x in]; returns hidden states [steps x hidden]. h0 may be empty
  // (zero initial state).
  Tensor<T> forward(const Tensor<T>& x, std::span<const T> h0 = {},
                    Cache* cache = nullptr) const {
    if (x.rank() != 2 || x.cols() != in_)
      throw ShapeMismatch("gru: expected [T x " + std::to_string(in_) +
                          "], got " + x.shape_string());
    std::vector<T> h(hidden_, T{0});
    if (!h0.empty()) {
      if (h0.size() != hidden_) throw ShapeMismatch("gru: bad initial state");
      h.assign(h0.begin(), h0.end());
    }
    if (cache) *cache = Cache{};
    Tensor<T> out({x.rows(), hidden_});
    for (std::size_t t = 0; t < x.rows(); ++t) {
      step(x.row(t), h, cache);
      std::copy(h.begin(), h.end(), out.row(t).begin());
    }
    return out;
  }

  // dH: [steps x hidden] gradient w.r.t. each emitted hidden state.
  // Accumulates into grad, returns dL/dx; dh0 (if non-empty) receives
  // dL/dh_0.
  Tensor<T> backward(const Cache& cache, const Tensor<T>& dH, GRU& grad,
                     std::span<T> dh0 = {}) const {
    const std::size_t H = hidden_;
    const std::size_t steps = cache.steps;
    require_shape(dH, {steps, H}, "gru backward");
    Tensor<T> dx({steps, in_});
    std::vector<T> dh(H, T{0}), dgi(3 * H), dgh(3 * H);
    for (std::size_t t = steps; t-- > 0;) {
      const T* r = &cache.r[t * H];
      const T* z = &cache.z[t * H];
      const T* n = &cache.n[t * H];
      const T* hn = &cache.hn[t * H];
      const T* hp = &cache.h_prev[t * H];
      for (std::size_t k = 0; k < H; ++k) dh[k] += dH(t, k);
      for (std::size_t k = 0; k < H; ++k) {
        const T dn = dh[k] * (T{1} - z[k]);
        const T dz = dh[k] * (hp[k] - n[k]);
        const T dn_pre = dn * (T{1} - n[k] * n[k]);
        const T dr = dn_pre * hn[k];
        const T dz_pre = dz * z[k] * (T{1} - z[k]);
        const T dr_pre = dr * r[k] * (T{1} - r[k]);
        dgi[k] = dr_pre;
        dgi[H + k] = dz_pre;
        dgi[2 * H + k] = dn_pre;
        dgh[k] = dr_pre;
        dgh[H + k] = dz_pre;
        dgh[2 * H + k] = dn_pre * r[k];
        dh[k] = dh[k] * z[k];
      }
      const T* xt = &cache.x[t * in_];
      accumulate_outer(dgi, std::span<const T>(xt, in_), grad.w_ih_, grad.b_ih_);
      accumulate_outer(dgh, std::span<const T>(hp, H), grad.w_hh_, grad.b_hh_);
      transpose_matvec_add(w_ih_, dgi, dx.row(t));
      transpose_matvec_add(w_hh_, dgh, std::span<T>(dh));
    }
    if (!dh0.empty()) std::copy(dh.begin(), dh.end(), dh0.begin());
    return dx;
  }

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".w_ih", w_ih_);
    f(prefix + ".w_hh", w_hh_);
    f(prefix + ".b_ih", b_ih_);
    f(prefix + ".b_hh", b_hh_);
  }

 private:
  static T sigmoid(T v) { return T{1} / (T{1} + std::exp(-v)); }

  static void matvec(const Tensor<T>& w, const Tensor<T>& b,
                     std::span<const T> x, std::vector<T>& y) {
    const std::size_t rows = w.rows(), cols = w.cols();
    const T* wp = w.data.data();
    for (std::size_t r = 0; r < rows; ++r) {
      T acc = b[r];
      const T* wr = wp + r * cols;
#pragma omp simd reduction(+ : acc)
      for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
      y[r] = acc;
    }
  }

  static void accumulate_outer(const std::vector<T>& g, std::span<const T> x,
                               Tensor<T>& gw, Tensor<T>& gb) {
    const std::size_t cols = x.size();
    for (std::size_t r = 0; r < g.size(); ++r) {
      const T gr = g[r];
      gb[r] += gr;
      if (gr == T{0}) continue;
      T* row = gw.data.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) row[c] += gr * x[c];
    }
  }

  static void transpose_matvec_add(const Tensor<T>& w, const std::vector<T>& g,
                                   std::span<T> out) {
    const std::size_t cols = w.cols();
    for (std::size_t r = 0; r < g.size(); ++r) {
      const T gr = g[r];
      if (gr == T{0}) continue;
      const T* row = w.data.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) out[c] += gr * row[c];
    }
  }

  std::size_t in_ = 0;
  std::size_t hidden_ = 0;
  Tensor<T> w_ih_, w_hh_, b_ih_, b_hh_;
};

}  // namespace rts::nn
