// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <random>

#include "rts/nn/tensor.hpp"

namespace rts::nn {

using Rng = std::mt19937_64;

// Glorot/Xavier uniform: U(-a, a) with a = gain * sqrt(6 / (fan_in + fan_out)).
template <typename T>
void xavier_uniform(Tensor<T>& w, std::size_t fan_in, std::size_t fan_out,
                    Rng& rng, double gain = 1.0) {
  const double a = gain * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  for (auto& v : w.data) v = static_cast<T>(dist(rng));
}

// Output (logit) layers are drawn at this gain so freshly initialized
// classifiers start near the uniform prediction.
inline constexpr double kHeadGain = 0.1;

}  // namespace rts::nn
