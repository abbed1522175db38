// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "rts/nn/tensor.hpp"

namespace rts::nn {

// Named parameter list gathered through a model's visit() method.
template <typename T>
using ParamList = std::vector<std::pair<std::string, Tensor<T>*>>;

template <typename Model>
auto collect_params(Model& model) {
  ParamList<float> out;
  model.visit([&](const std::string& name, Tensor<float>& t) {
    out.emplace_back(name, &t);
  });
  return out;
}

template <typename Model>
std::size_t count_parameters(Model& model) {
  std::size_t n = 0;
  model.visit([&](const std::string&, Tensor<float>& t) { n += t.size(); });
  return n;
}

template <typename Model>
void zero_grads(Model& grad) {
  grad.visit([](const std::string&, Tensor<float>& t) { t.fill(0.0f); });
}

// Adds src's tensors into dst's, elementwise, in visit order.
template <typename Model>
void add_grads(Model& dst, Model& src) {
  auto d = collect_params(dst);
  auto s = collect_params(src);
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto& a = d[i].second->data;
    const auto& b = s[i].second->data;
    for (std::size_t j = 0; j < a.size(); ++j) a[j] += b[j];
  }
}

// Bias-corrected Adam.
template <typename T>
class Adam {
 public:
  struct Options {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  Adam() = default;
  explicit Adam(Options o) : opt_(o) {}

  std::size_t steps() const { return t_; }
  const std::vector<Tensor<T>>& first_moment() const { return m_; }
  const std::vector<Tensor<T>>& second_moment() const { return v_; }

  void step(const ParamList<T>& params, const ParamList<T>& grads, double lr) {
    if (params.size() != grads.size())
      throw ShapeMismatch("adam: parameter/gradient list sizes differ");
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!params[i].second->same_shape(*grads[i].second))
        throw ShapeMismatch("adam: shape mismatch at " + params[i].first);
      if (!grads[i].second->all_finite())
        throw NumericError("adam: non-finite gradient in " + grads[i].first);
    }
    if (m_.empty()) {
      for (const auto& [name, p] : params) {
        m_.emplace_back(p->shape);
        v_.emplace_back(p->shape);
      }
    } else if (m_.size() != params.size()) {
      throw ShapeMismatch("adam: parameter list changed between steps");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i].second->data;
      const auto& g = grads[i].second->data;
      auto& m = m_[i].data;
      auto& v = v_[i].data;
      for (std::size_t j = 0; j < p.size(); ++j) {
        const double gj = g[j];
        const double mj = opt_.beta1 * m[j] + (1.0 - opt_.beta1) * gj;
        const double vj = opt_.beta2 * v[j] + (1.0 - opt_.beta2) * gj * gj;
        m[j] = static_cast<T>(mj);
        v[j] = static_cast<T>(vj);
        const double mhat = mj / bc1;
        const double vhat = vj / bc2;
        p[j] = static_cast<T>(p[j] - lr * mhat / (std::sqrt(vhat) + opt_.eps));
      }
    }
  }

  template <typename Model>
  void step(Model& model, Model& grad, double lr) {
    step(collect_params(model), collect_params(grad), lr);
  }

 private:
  Options opt_;
  std::size_t t_ = 0;
  std::vector<Tensor<T>> m_, v_;
};

}  // namespace rts::nn
