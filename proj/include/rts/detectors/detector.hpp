// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rts/features/gesture.hpp"
#include "rts/features/timeline.hpp"
#include "rts/nn/adam.hpp"
#include "rts/nn/checkpoint.hpp"
#include "rts/nn/conv1d.hpp"
#include "rts/nn/dense.hpp"
#include "rts/nn/loss.hpp"

namespace rts::detectors {

enum class Modality { kSpeech, kGesture };

inline const char* modality_name(Modality m) { return m == Modality::kSpeech ? "speech" : "gesture"; }

inline Modality parse_modality(std::string_view s) {
  if (s == "speech") return Modality::kSpeech;
  if (s == "gesture") return Modality::kGesture;
  throw InvalidInput("unknown modality: " + std::string(s));
}

struct DetectorConfig {
  Modality modality = Modality::kSpeech;
  std::size_t n_conv_layers = 1;
  std::size_t filters = 16;
  std::size_t kernel = 5;
  std::size_t window = 10;       // ticks of context
  std::size_t input_dims = 400;  // per-tick feature width
  std::size_t classes = 2;

  static DetectorConfig speech(std::size_t n_conv = 1) {
    return {Modality::kSpeech, n_conv, 16, 5, 10, features::kAudioTickDims, 2};
  }
  static DetectorConfig gesture(std::size_t n_conv = 1) {
    return {Modality::kGesture, n_conv, 16, 5, 20, features::kGestureDims, 4};
  }
  static DetectorConfig for_modality(Modality m, std::size_t n_conv = 1) {
    return m == Modality::kSpeech ? speech(n_conv) : gesture(n_conv);
  }

  void validate() const {
    if (n_conv_layers != 1 && n_conv_layers != 3 && n_conv_layers != 5)
      throw InvalidInput("detector: n_conv_layers must be 1, 3 or 5");
    if (filters == 0 || kernel == 0 || window == 0 || input_dims == 0)
      throw InvalidInput("detector: sizes must be positive");
    if (modality == Modality::kSpeech && classes != 2)
      throw InvalidInput("detector: speech detector has 2 classes");
    if (modality == Modality::kGesture && classes != 4)
      throw InvalidInput("detector: gesture detector has 4 classes");
  }

  // Trainable scalars: conv stack, then dense 128, 32, K.
  std::size_t parameter_count() const {
    std::size_t n = 0, c = input_dims;
    for (std::size_t l = 0; l < n_conv_layers; ++l) {
      n += filters * kernel * c + filters;
      c = filters;
    }
    const std::size_t flat = window * filters;
    return n + flat * 128 + 128 + 128 * 32 + 32 + 32 * classes + classes;
  }

  nlohmann::json to_json() const {
    return {{"type", "detector"},       {"modality", modality_name(modality)},
            {"n_conv_layers", n_conv_layers}, {"filters", filters},
            {"kernel", kernel},         {"window", window},
            {"input_dims", input_dims}, {"classes", classes}};
  }

  static DetectorConfig from_json(const nlohmann::json& j) {
    try {
      if (j.at("type").get<std::string>() != "detector") throw FormatError("sidecar is not a detector config");
      DetectorConfig c;
      c.modality = parse_modality(j.at("modality").get<std::string>());
      c.n_conv_layers = j.at("n_conv_layers").get<std::size_t>();
      c.filters = j.at("filters").get<std::size_t>();
      c.kernel = j.at("kernel").get<std::size_t>();
      c.window = j.at("window").get<std::size_t>();
      c.input_dims = j.at("input_dims").get<std::size_t>();
      c.classes = j.at("classes").get<std::size_t>();
      c.validate();
      return c;
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("detector config: ") + e.what());
    }
  }

  bool operator==(const DetectorConfig&) const = default;
};

// Fixed affine input map x -> (x - mean) * inv_std, fitted on training data.
struct Normalizer {
  std::vector<float> mean, inv_std;

  explicit Normalizer(std::size_t dims = 0) : mean(dims, 0.0f), inv_std(dims, 1.0f) {}

  void apply(std::span<const float> x, std::span<float> out) const {
    for (std::size_t i = 0; i < mean.size(); ++i) out[i] = (x[i] - mean[i]) * inv_std[i];
  }

  // Per-dimension moments over the rows of every matrix, in double.
  static Normalizer fit(const std::vector<const nn::Tensor<float>*>& mats, std::size_t dims) {
    std::vector<double> s(dims, 0.0), ss(dims, 0.0);
    std::size_t n = 0;
    for (const auto* m : mats) {
      for (std::size_t r = 0; r < m->rows(); ++r) {
        const auto row = m->row(r);
        for (std::size_t i = 0; i < dims; ++i) {
          s[i] += row[i];
          ss[i] += double(row[i]) * row[i];
        }
      }
      n += m->rows();
    }
    Normalizer z(dims);
    if (n == 0) return z;
    for (std::size_t i = 0; i < dims; ++i) {
      const double mu = s[i] / n;
      const double var = std::max(0.0, ss[i] / n - mu * mu);
      z.mean[i] = static_cast<float>(mu);
      z.inv_std[i] = static_cast<float>(1.0 / std::sqrt(var + 1e-6));
    }
    return z;
  }
};

// 1D-CNN streaming classifier: causal conv stack over a window of ticks,
// flatten, dense 128, dense 32, dense K. Returns raw logits.
class Detector {
 public:
  struct Cache {
    std::vector<nn::Tensor<float>> act;  // act[0] = input window, act[l+1] = conv l output (post-ReLU)
    std::vector<float> h1, h2;           // dense outputs after ReLU
  };

  Detector() = default;
  explicit Detector(const DetectorConfig& cfg) : cfg_(cfg), norm_(cfg.input_dims) {
    cfg.validate();
    std::size_t c = cfg.input_dims;
    for (std::size_t l = 0; l < cfg.n_conv_layers; ++l) {
      convs_.emplace_back(c, cfg.kernel, cfg.filters);
      c = cfg.filters;
    }
    d1_ = nn::Dense<float>(cfg.window * cfg.filters, 128);
    d2_ = nn::Dense<float>(128, 32);
    d3_ = nn::Dense<float>(32, cfg.classes);
  }

  const DetectorConfig& config() const { return cfg_; }
  Normalizer& normalizer() { return norm_; }
  const Normalizer& normalizer() const { return norm_; }
  std::size_t classes() const { return cfg_.classes; }
  std::size_t window() const { return cfg_.window; }
  std::size_t input_dims() const { return cfg_.input_dims; }

  void init(nn::Rng& rng) {
    for (auto& c : convs_) c.init(rng);
    d1_.init(rng);
    d2_.init(rng);
    d3_.init(rng, nn::kHeadGain);
  }

  Detector zeros_like() const {
    Detector z(cfg_);
    z.norm_ = norm_;
    return z;
  }

  std::size_t parameter_count() const {
    std::size_t n = d1_.parameter_count() + d2_.parameter_count() + d3_.parameter_count();
    for (const auto& c : convs_) n += c.parameter_count();
    return n;
  }

  template <typename F>
  void visit(F&& f) {
    for (std::size_t l = 0; l < convs_.size(); ++l) convs_[l].visit("conv" + std::to_string(l), f);
    d1_.visit("dense0", f);
    d2_.visit("dense1", f);
    d3_.visit("dense2", f);
  }

  // window: [W x C] normalized features, oldest tick first.
  void forward(const nn::Tensor<float>& window, std::span<float> logits, Cache* cache = nullptr) const {
    nn::require_shape(window, {cfg_.window, cfg_.input_dims}, "detector window");
    if (logits.size() != cfg_.classes) throw ShapeMismatch("detector: logit buffer size");
    Cache local;
    Cache& c = cache ? *cache : local;
    c.act.resize(convs_.size() + 1);
    c.act[0] = window;
    for (std::size_t l = 0; l < convs_.size(); ++l) {
      c.act[l + 1] = convs_[l].forward(c.act[l]);
      nn::relu_inplace(c.act[l + 1].data);
    }
    c.h1.resize(128);
    c.h2.resize(32);
    d1_.forward_row(c.act.back().data, c.h1);
    nn::relu_inplace(c.h1);
    d2_.forward_row(c.h1, c.h2);
    nn::relu_inplace(c.h2);
    d3_.forward_row(c.h2, logits);
  }

  // Accumulates parameter gradients for dL/dlogits into grad.
  void backward(const Cache& c, std::span<const float> dlogits, Detector& grad) const {
    std::vector<float> dh2(32), dh1(128), dflat(cfg_.window * cfg_.filters);
    d3_.backward_row(c.h2, dlogits, dh2, grad.d3_);
    nn::relu_backward_inplace(dh2, c.h2);
    d2_.backward_row(c.h1, dh2, dh1, grad.d2_);
    nn::relu_backward_inplace(dh1, c.h1);
    d1_.backward_row(c.act.back().data, dh1, dflat, grad.d1_);
    nn::Tensor<float> dy({cfg_.window, cfg_.filters});
    dy.data = std::move(dflat);
    for (std::size_t l = convs_.size(); l-- > 0;) {
      nn::relu_backward_inplace(dy.data, c.act[l + 1].data);
      auto dx = convs_[l].backward(c.act[l], dy, grad.convs_[l], l > 0);
      if (l > 0) dy = std::move(dx);
    }
  }

  // Window ending at tick t over normalized features [T x C]; ticks before
  // the session start are zero.
  void window_at(const nn::Tensor<float>& normalized, std::size_t t, nn::Tensor<float>& out) const {
    const std::size_t W = cfg_.window, C = cfg_.input_dims;
    if (out.shape != std::vector<std::size_t>{W, C}) out = nn::Tensor<float>({W, C});
    for (std::size_t i = 0; i < W; ++i) {
      const long src = static_cast<long>(t) - static_cast<long>(W - 1) + static_cast<long>(i);
      float* dst = &out(i, 0);
      if (src < 0) {
        std::fill(dst, dst + C, 0.0f);
      } else {
        const auto row = normalized.row(static_cast<std::size_t>(src));
        std::copy(row.begin(), row.end(), dst);
      }
    }
  }

  nn::Tensor<float> normalize(const nn::Tensor<float>& feats) const {
    if (feats.rank() != 2 || feats.cols() != cfg_.input_dims)
      throw ShapeMismatch("detector: features " + feats.shape_string() + " vs input dims " +
                          std::to_string(cfg_.input_dims));
    nn::Tensor<float> z(feats.shape);
    for (std::size_t r = 0; r < feats.rows(); ++r) norm_.apply(feats.row(r), z.row(r));
    return z;
  }

  // Batch mode: logits for every tick of a raw feature matrix [T x C].
  nn::Tensor<float> forward_session(const nn::Tensor<float>& feats) const {
    const auto z = normalize(feats);
    nn::Tensor<float> out({feats.rows(), cfg_.classes});
    nn::Tensor<float> win;
    for (std::size_t t = 0; t < feats.rows(); ++t) {
      window_at(z, t, win);
      forward(win, out.row(t));
    }
    return out;
  }

  // Per-tick argmax of the logits; ties go to the lower class index.
  std::vector<std::uint8_t> predict_labels(const nn::Tensor<float>& feats) const {
    const auto logits = forward_session(feats);
    std::vector<std::uint8_t> out(logits.rows());
    for (std::size_t t = 0; t < logits.rows(); ++t)
      out[t] = static_cast<std::uint8_t>(nn::argmax(logits.row(t)));
    return out;
  }

  nn::Checkpoint to_checkpoint() const {
    nn::Checkpoint ck;
    ck.chunks["CONF"] = cfg_.to_json().dump();
    ck.layers.push_back({nn::LayerKind::kNormalize,
                         {static_cast<std::uint32_t>(cfg_.input_dims)},
                         {norm_.mean, norm_.inv_std}});
    for (const auto& c : convs_) ck.layers.push_back(nn::to_record(c));
    ck.layers.push_back(nn::to_record(d1_));
    ck.layers.push_back(nn::to_record(d2_));
    ck.layers.push_back(nn::to_record(d3_));
    return ck;
  }

  // Builds a detector from a checkpoint; if `expected` is given the sidecar
  // config must match it.
  static Detector from_checkpoint(const nn::Checkpoint& ck, const DetectorConfig* expected = nullptr) {
    const auto it = ck.chunks.find("CONF");
    if (it == ck.chunks.end()) throw FormatError("detector checkpoint: missing CONF chunk");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(it->second);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("detector checkpoint: bad CONF: ") + e.what());
    }
    const auto cfg = DetectorConfig::from_json(j);
    if (expected && !(cfg == *expected))
      throw ShapeMismatch("detector checkpoint: config " + j.dump() + " does not match expected " +
                          expected->to_json().dump());
    Detector d(cfg);
    if (ck.layers.size() != cfg.n_conv_layers + 4)
      throw ShapeMismatch("detector checkpoint: layer count " + std::to_string(ck.layers.size()));
    nn::expect_record(ck.layers[0], nn::LayerKind::kNormalize, {static_cast<std::uint32_t>(cfg.input_dims)});
    d.norm_.mean = ck.layers[0].tensors[0];
    d.norm_.inv_std = ck.layers[0].tensors[1];
    for (std::size_t l = 0; l < cfg.n_conv_layers; ++l) nn::from_record(ck.layers[1 + l], d.convs_[l]);
    nn::from_record(ck.layers[cfg.n_conv_layers + 1], d.d1_);
    nn::from_record(ck.layers[cfg.n_conv_layers + 2], d.d2_);
    nn::from_record(ck.layers[cfg.n_conv_layers + 3], d.d3_);
    return d;
  }

 private:
  DetectorConfig cfg_;
  Normalizer norm_;
  std::vector<nn::Conv1D<float>> convs_;
  nn::Dense<float> d1_, d2_, d3_;
};

// Per-stream state: ring buffer of the last W normalized frames.
class DetectorStream {
 public:
  explicit DetectorStream(const Detector& det)
      : det_(&det), ring_({det.window(), det.input_dims()}), win_({det.window(), det.input_dims()}),
        logits_(det.classes()) {}

  void reset() {
    ring_.fill(0.0f);
    head_ = 0;
    last_ts_ = -std::numeric_limits<double>::infinity();
  }

  // One decision tick. Timestamps must strictly increase.
  std::span<const float> step(std::span<const float> frame, double timestamp) {
    if (frame.size() != det_->input_dims()) throw ShapeMismatch("detector step: frame width");
    if (!(timestamp > last_ts_)) throw InvalidInput("detector step: out-of-order timestamp");
    last_ts_ = timestamp;
    det_->normalizer().apply(frame, ring_.row(head_));
    head_ = (head_ + 1) % det_->window();
    const std::size_t W = det_->window();
    for (std::size_t i = 0; i < W; ++i) {
      const auto src = ring_.row((head_ + i) % W);
      std::copy(src.begin(), src.end(), win_.row(i).begin());
    }
    det_->forward(win_, logits_, &cache_);
    return logits_;
  }

 private:
  const Detector* det_;
  nn::Tensor<float> ring_, win_;
  std::vector<float> logits_;
  Detector::Cache cache_;
  std::size_t head_ = 0;
  double last_ts_ = -std::numeric_limits<double>::infinity();
};

}  // namespace rts::detectors
