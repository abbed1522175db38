// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "rts/nn/tensor.hpp"

namespace rts::nn {

// Numerically stable softmax (max subtracted before exponentiation).
template <typename T>
void softmax(std::span<const T> logits, std::span<T> out) {
  if (logits.empty() || out.size() != logits.size())
    throw ShapeMismatch("softmax: size mismatch");
  T mx = logits[0];
  for (T v : logits) {
    if (!std::isfinite(v)) throw InvalidInput("softmax: non-finite logit");
    mx = std::max(mx, v);
  }
  T total = T{0};
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - mx);
    total += out[k];
  }
  for (T& v : out) v /= total;
}

template <typename T>
std::vector<T> softmax(std::span<const T> logits) {
  std::vector<T> out(logits.size());
  softmax(logits, std::span<T>(out));
  return out;
}

template <typename T>
  requires(!std::is_const_v<T>)
std::vector<T> softmax(std::span<T> logits) {
  return softmax(std::span<const T>(logits.data(), logits.size()));
}

template <typename T>
std::vector<T> softmax(const std::vector<T>& logits) {
  return softmax(std::span<const T>(logits));
}

// Frame-wise logits and one-hot targets for n sessions x m frames x K
// classes, stored flat as [n*m x K].
template <typename T>
struct LabeledFrameBatch {
  std::size_t sessions = 0;
  std::size_t frames = 0;
  std::size_t classes = 0;
  Tensor<T> logits;  // [sessions*frames x classes]
  Tensor<T> labels;  // one-hot, same shape

  static LabeledFrameBatch from_indices(Tensor<T> logits,
                                        const std::vector<int>& targets,
                                        std::size_t sessions = 1) {
    LabeledFrameBatch b;
    b.classes = logits.cols();
    b.sessions = sessions;
    b.frames = sessions ? logits.rows() / sessions : 0;
    b.labels = Tensor<T>(logits.shape);
    if (targets.size() != logits.rows())
      throw ShapeMismatch("label count does not match logit rows");
    for (std::size_t r = 0; r < targets.size(); ++r) {
      if (targets[r] < 0 || static_cast<std::size_t>(targets[r]) >= b.classes)
        throw InvalidInput("label index out of range");
      b.labels(r, static_cast<std::size_t>(targets[r])) = T{1};
    }
    b.logits = std::move(logits);
    return b;
  }
};

template <typename T>
struct LossResult {
  T loss = T{0};          // summed over every frame
  Tensor<T> grad;         // dL/dlogits, same shape as logits
};

// l = -sum_{i,j,k} w_k y_k log softmax(l)_k. Gradient per row is
// w_{y} (s - y) for one-hot y. class_weights may be empty (all ones).
template <typename T>
LossResult<T> cross_entropy(const Tensor<T>& logits, const Tensor<T>& labels,
                            std::span<const T> class_weights = {}) {
  if (logits.shape != labels.shape || logits.rank() != 2)
    throw ShapeMismatch("cross_entropy: logits " + logits.shape_string() +
                        " vs labels " + labels.shape_string());
  const std::size_t K = logits.cols();
  if (!class_weights.empty() && class_weights.size() != K)
    throw ShapeMismatch("cross_entropy: class weight count");
  LossResult<T> res;
  res.grad = Tensor<T>(logits.shape);
  std::vector<T> s(K);
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto lr = logits.row(r);
    auto yr = labels.row(r);
    T mx = lr[0];
    for (T v : lr) mx = std::max(mx, v);
    T total = T{0};
    for (std::size_t k = 0; k < K; ++k) {
      s[k] = std::exp(lr[k] - mx);
      total += s[k];
    }
    for (std::size_t k = 0; k < K; ++k) s[k] /= total;
    const T log_total = std::log(total) + mx;
    T ysum = T{0}, w = T{0};
    for (std::size_t k = 0; k < K; ++k) {
      ysum += yr[k];
      if (yr[k] != T{0}) {
        const T wk = class_weights.empty() ? T{1} : class_weights[k];
        w += wk * yr[k];
        res.loss -= wk * yr[k] * (lr[k] - log_total);
      }
    }
    if (std::abs(ysum - T{1}) > T(1e-6))
      throw InvalidInput("cross_entropy: label row does not sum to 1");
    auto gr = res.grad.row(r);
    if (class_weights.empty()) {
      for (std::size_t k = 0; k < K; ++k) gr[k] = s[k] - yr[k];
    } else {
      for (std::size_t k = 0; k < K; ++k) gr[k] = w * s[k] - class_weights[k] * yr[k];
    }
  }
  return res;
}

template <typename T>
LossResult<T> cross_entropy(const LabeledFrameBatch<T>& batch,
                            std::span<const T> class_weights = {}) {
  return cross_entropy(batch.logits, batch.labels, class_weights);
}

// Single-frame convenience used by the training loops.
template <typename T>
T cross_entropy_row(std::span<const T> logits, int target, T weight,
                    std::span<T> grad) {
  const std::size_t K = logits.size();
  T mx = logits[0];
  for (T v : logits) mx = std::max(mx, v);
  T total = T{0};
  for (std::size_t k = 0; k < K; ++k) {
    grad[k] = std::exp(logits[k] - mx);
    total += grad[k];
  }
  const T log_total = std::log(total) + mx;
  for (std::size_t k = 0; k < K; ++k) grad[k] = weight * grad[k] / total;
  grad[static_cast<std::size_t>(target)] -= weight;
  return -weight * (logits[static_cast<std::size_t>(target)] - log_total);
}

// Inverse-frequency weights w_k = N / (K n_k); classes absent from the
// data get weight 0.
inline std::vector<float> inverse_frequency_weights(
    const std::vector<std::size_t>& counts) {
  std::size_t total = 0, present = 0;
  for (auto c : counts) {
    total += c;
    present += c > 0;
  }
  std::vector<float> w(counts.size(), 0.0f);
  for (std::size_t k = 0; k < counts.size(); ++k)
    if (counts[k] > 0)
      w[k] = static_cast<float>(static_cast<double>(total) /
                                (static_cast<double>(present) * counts[k]));
  return w;
}

template <typename T>
std::size_t argmax(std::span<const T> v) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k)
    if (v[k] > v[best]) best = k;
  return best;
}

}  // namespace rts::nn
