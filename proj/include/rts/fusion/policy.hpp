// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rts/nn/adam.hpp"
#include "rts/nn/checkpoint.hpp"
#include "rts/nn/dense.hpp"
#include "rts/nn/gru.hpp"
#include "rts/nn/loss.hpp"

namespace rts::fusion {

inline constexpr std::size_t kFusionDims = 6;  // [gesture(4) | speech(2)]
inline constexpr std::size_t kGestureBlock = 4;
inline constexpr std::size_t kSpeechBlock = 2;
inline constexpr std::size_t kTriggerCooldown = 30;

enum class FusionType { kSoftmax, kLogit };

inline const char* fusion_name(FusionType f) { return f == FusionType::kSoftmax ? "softmax" : "logit"; }

inline FusionType parse_fusion(std::string_view s) {
  if (s == "softmax") return FusionType::kSoftmax;
  if (s == "logit") return FusionType::kLogit;
  throw InvalidInput("unknown fusion type: " + std::string(s));
}

// Per-tick concatenation of detector outputs. Softmax fusion normalizes
// each modality block; logit fusion passes raw outputs through.
inline nn::Tensor<float> align_and_merge(const nn::Tensor<float>& speech, const nn::Tensor<float>& gesture,
                                         FusionType type) {
  if (speech.rank() != 2 || speech.cols() != kSpeechBlock)
    throw ShapeMismatch("align_and_merge: speech outputs must be [T x 2], got " + speech.shape_string());
  if (gesture.rank() != 2 || gesture.cols() != kGestureBlock)
    throw ShapeMismatch("align_and_merge: gesture outputs must be [T x 4], got " + gesture.shape_string());
  if (speech.rows() != gesture.rows())
    throw ShapeMismatch("align_and_merge: grid mismatch, speech " + std::to_string(speech.rows()) +
                        " ticks vs gesture " + std::to_string(gesture.rows()));
  nn::Tensor<float> out({speech.rows(), kFusionDims});
  for (std::size_t t = 0; t < speech.rows(); ++t) {
    auto row = out.row(t);
    const auto g = gesture.row(t);
    const auto s = speech.row(t);
    if (type == FusionType::kSoftmax) {
      nn::softmax(g, row.subspan(0, kGestureBlock));
      nn::softmax(s, row.subspan(kGestureBlock, kSpeechBlock));
    } else {
      std::copy(g.begin(), g.end(), row.begin());
      std::copy(s.begin(), s.end(), row.begin() + kGestureBlock);
    }
  }
  return out;
}

struct PolicyConfig {
  FusionType fusion = FusionType::kLogit;
  std::size_t h_dim = 64;
  double threshold = 0.5;
  bool allow_any_hidden = false;

  void validate() const {
    if (h_dim == 0) throw InvalidInput("policy: h_dim must be positive");
    if (!allow_any_hidden && h_dim != 32 && h_dim != 64) throw InvalidInput("policy: h_dim must be 32 or 64");
    if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidInput("policy: threshold must be in (0,1)");
  }

  // GRU(6 -> h) plus dense(h -> 2).
  std::size_t parameter_count() const {
    return 3 * h_dim * kFusionDims + 3 * h_dim * h_dim + 6 * h_dim + 2 * h_dim + 2;
  }

  nlohmann::json to_json() const {
    return {{"type", "policy"}, {"fusion_type", fusion_name(fusion)}, {"h_dim", h_dim}, {"threshold", threshold}};
  }

  static PolicyConfig from_json(const nlohmann::json& j) {
    try {
      if (j.at("type").get<std::string>() != "policy") throw FormatError("sidecar is not a policy config");
      PolicyConfig c;
      c.fusion = parse_fusion(j.at("fusion_type").get<std::string>());
      c.h_dim = j.at("h_dim").get<std::size_t>();
      c.threshold = j.value("threshold", 0.5);
      c.allow_any_hidden = c.h_dim != 32 && c.h_dim != 64;
      c.validate();
      return c;
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("policy config: ") + e.what());
    }
  }
};

inline void require_finite_row(std::span<const float> x) {
  for (float v : x)
    if (!std::isfinite(v)) throw NumericError("policy: non-finite fusion input");
}

// GRU neural policy: 6-dim fusion input -> hidden -> 2-way logits; index 1
// is "intended".
class NeuralPolicy {
 public:
  NeuralPolicy() = default;
  explicit NeuralPolicy(const PolicyConfig& cfg)
      : cfg_(cfg), gru_(kFusionDims, cfg.h_dim), head_(cfg.h_dim, 2) {
    cfg.validate();
  }

  const PolicyConfig& config() const { return cfg_; }
  PolicyConfig& config() { return cfg_; }
  std::size_t hidden_dim() const { return cfg_.h_dim; }
  std::size_t parameter_count() const { return gru_.parameter_count() + head_.parameter_count(); }

  void init(nn::Rng& rng) {
    gru_.init(rng);
    head_.init(rng, nn::kHeadGain);
  }

  NeuralPolicy zeros_like() const {
    NeuralPolicy z(cfg_);
    return z;
  }

  template <typename F>
  void visit(F&& f) {
    gru_.visit("gru", f);
    head_.visit("head", f);
  }

  const nn::GRU<float>& gru() const { return gru_; }
  const nn::Dense<float>& head() const { return head_; }

  // Batch unrolling from a zero state: logits [T x 2].
  nn::Tensor<float> logits(const nn::Tensor<float>& x, nn::GRU<float>::Cache* cache = nullptr,
                           nn::Tensor<float>* hidden = nullptr) const {
    nn::require_shape(x, {x.rows(), kFusionDims}, "policy input");
    for (std::size_t t = 0; t < x.rows(); ++t) require_finite_row(x.row(t));
    auto h = gru_.forward(x, {}, cache);
    nn::Tensor<float> out({x.rows(), 2});
    for (std::size_t t = 0; t < x.rows(); ++t) head_.forward_row(h.row(t), out.row(t));
    if (hidden) *hidden = std::move(h);
    return out;
  }

  // p_intended per tick.
  std::vector<float> score(const nn::Tensor<float>& x) const {
    const auto l = logits(x);
    std::vector<float> p(l.rows());
    float s[2];
    for (std::size_t t = 0; t < l.rows(); ++t) {
      nn::softmax(l.row(t), std::span<float>(s, 2));
      p[t] = s[1];
    }
    return p;
  }

  // Weighted frame-wise cross-entropy over one session; accumulates
  // parameter gradients into grad when given. Returns the summed loss.
  double session_loss(const nn::Tensor<float>& x, std::span<const std::uint8_t> intent,
                      std::span<const float> class_weights, NeuralPolicy* grad, float scale = 1.0f) const {
    if (intent.size() != x.rows()) throw ShapeMismatch("policy: label count differs from tick count");
    nn::GRU<float>::Cache cache;
    nn::Tensor<float> hidden;
    const auto lg = logits(x, grad ? &cache : nullptr, &hidden);
    nn::Tensor<float> dH({x.rows(), cfg_.h_dim});
    double total = 0;
    float dl[2];
    for (std::size_t t = 0; t < x.rows(); ++t) {
      const int y = intent[t] ? 1 : 0;
      const float w = scale * (class_weights.empty() ? 1.0f : class_weights[static_cast<std::size_t>(y)]);
      total += nn::cross_entropy_row<float>(lg.row(t), y, w, std::span<float>(dl, 2));
      if (grad) head_.backward_row(hidden.row(t), std::span<const float>(dl, 2), dH.row(t), grad->head_);
    }
    if (grad) gru_.backward(cache, dH, grad->gru_);
    return total;
  }

  nn::Checkpoint to_checkpoint() const {
    nn::Checkpoint ck;
    ck.chunks["CONF"] = cfg_.to_json().dump();
    ck.layers.push_back(nn::to_record(gru_));
    ck.layers.push_back(nn::to_record(head_));
    return ck;
  }

  static NeuralPolicy from_checkpoint(const nn::Checkpoint& ck) {
    const auto it = ck.chunks.find("CONF");
    if (it == ck.chunks.end()) throw FormatError("policy checkpoint: missing CONF chunk");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(it->second);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("policy checkpoint: bad CONF: ") + e.what());
    }
    NeuralPolicy p(PolicyConfig::from_json(j));
    if (ck.layers.size() != 2) throw ShapeMismatch("policy checkpoint: expected 2 layers");
    nn::from_record(ck.layers[0], p.gru_);
    nn::from_record(ck.layers[1], p.head_);
    return p;
  }

 private:
  PolicyConfig cfg_;
  nn::GRU<float> gru_;
  nn::Dense<float> head_;
};

// Streaming state for one session.
class PolicyStream {
 public:
  explicit PolicyStream(const NeuralPolicy& p) : p_(&p), h_(p.hidden_dim(), 0.0f) {}

  void reset() { std::fill(h_.begin(), h_.end(), 0.0f); }
  std::span<const float> hidden() const { return h_; }

  float step(std::span<const float> x) {
    if (x.size() != kFusionDims) throw ShapeMismatch("policy step: input must have 6 values");
    require_finite_row(x);
    p_->gru().step(x, h_);
    float l[2], s[2];
    p_->head().forward_row(h_, std::span<float>(l, 2));
    nn::softmax(std::span<const float>(l, 2), std::span<float>(s, 2));
    return s[1];
  }

 private:
  const NeuralPolicy* p_;
  std::vector<float> h_;
};

struct TriggerEvent {
  std::size_t tick = 0;
  float peak = 0.0f;
  std::string policy;

  double time() const { return static_cast<double>(tick) * kTickSeconds; }
};

// Rising-edge extraction: an event fires where p crosses up to >= theta,
// unless it lies within `cooldown` ticks of the previous event. The peak is
// the maximum score of the supra-threshold run that started the event.
inline std::vector<TriggerEvent> decide_triggers(std::span<const float> p, double theta,
                                                 std::size_t cooldown = kTriggerCooldown,
                                                 const std::string& policy = "neural") {
  if (!(theta > 0.0 && theta < 1.0)) throw InvalidInput("decide_triggers: theta must be in (0,1)");
  std::vector<TriggerEvent> out;
  bool prev_above = false, have_last = false;
  std::size_t last = 0;
  for (std::size_t t = 0; t < p.size(); ++t) {
    const bool above = static_cast<double>(p[t]) >= theta;
    if (above && !prev_above && (!have_last || t - last >= cooldown)) {
      TriggerEvent e{t, p[t], policy};
      for (std::size_t k = t + 1; k < p.size() && static_cast<double>(p[k]) >= theta; ++k)
        e.peak = std::max(e.peak, p[k]);
      out.push_back(std::move(e));
      last = t;
      have_last = true;
    }
    prev_above = above;
  }
  return out;
}

}  // namespace rts::fusion
