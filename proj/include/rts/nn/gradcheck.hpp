// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "rts/nn/adam.hpp"
#include "rts/nn/init.hpp"

namespace rts::nn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst_param;
};

// Compares analytic gradients (already written into `grads`) against central
// differences of loss_fn at `samples` randomly chosen scalar parameters.
// Relative error is |a - n| / max(|a|, |n|, denom_floor).
inline GradCheckResult finite_difference_check(
    const ParamList<double>& params, const ParamList<double>& grads,
    const std::function<double()>& loss_fn, std::size_t samples, Rng& rng,
    double step = 1e-5, double denom_floor = 1e-6) {
  if (params.size() != grads.size())
    throw ShapeMismatch("gradcheck: parameter/gradient lists differ");
  std::size_t total = 0;
  for (const auto& p : params) total += p.second->size();
  if (total == 0) return {};
  GradCheckResult res;
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  const std::size_t n = std::min(samples, total);
  for (std::size_t s = 0; s < n; ++s) {
    std::size_t flat = n == total ? s : pick(rng);
    std::size_t which = 0;
    while (flat >= params[which].second->size()) {
      flat -= params[which].second->size();
      ++which;
    }
    double& w = params[which].second->data[flat];
    const double saved = w;
    w = saved + step;
    const double up = loss_fn();
    w = saved - step;
    const double down = loss_fn();
    w = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double analytic = grads[which].second->data[flat];
    const double denom =
        std::max({std::abs(analytic), std::abs(numeric), denom_floor});
    const double rel = std::abs(analytic - numeric) / denom;
    if (rel > res.max_rel_error) {
      res.max_rel_error = rel;
      res.worst_param = params[which].first + "[" + std::to_string(flat) + "]";
    }
    ++res.checked;
  }
  return res;
}

template <typename Layer>
ParamList<double> layer_params(Layer& layer, const std::string& prefix) {
  ParamList<double> out;
  layer.visit(prefix, [&](const std::string& name, Tensor<double>& t) {
    out.emplace_back(name, &t);
  });
  return out;
}

template <typename T>
void fill_uniform(Tensor<T>& t, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  for (auto& v : t.data) v = static_cast<T>(d(rng));
}

}  // namespace rts::nn
