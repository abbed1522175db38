// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "rts/detectors/detector.hpp"
#include "rts/train/config.hpp"
#include "rts/train/dataset.hpp"

namespace rts::train {

using detectors::Detector;
using detectors::DetectorConfig;
using detectors::Modality;

inline const nn::Tensor<float>& modality_features(const Example& e, Modality m) {
  return m == Modality::kSpeech ? e.audio : e.gesture;
}

inline const std::vector<std::uint8_t>& modality_labels(const Example& e, Modality m) {
  return m == Modality::kSpeech ? e.labels.speech : e.labels.gesture;
}

struct DetectorEpoch {
  std::size_t epoch = 0;
  double train_loss = 0;
  double val_accuracy = 0;
  double val_balanced_accuracy = 0;
  double seconds = 0;
};

struct DetectorTrainResult {
  Detector model;
  double initial_loss = 0;  // unweighted mean CE of the fresh model on the first batch
  std::size_t best_epoch = 0;
  double best_val_accuracy = -1;  // balanced (mean per-class recall)
  std::vector<DetectorEpoch> history;
};

struct FrameAccuracy {
  double accuracy = 0, balanced = 0;
};

inline FrameAccuracy frame_accuracy(const Detector& det, const std::vector<const Example*>& set, Modality m) {
  const std::size_t K = det.classes();
  std::vector<std::vector<std::size_t>> hit(set.size(), std::vector<std::size_t>(K)), tot = hit;
  parallel_for(set.size(), [&](std::size_t i) {
    const auto pred = det.predict_labels(modality_features(*set[i], m));
    const auto& y = modality_labels(*set[i], m);
    for (std::size_t t = 0; t < pred.size(); ++t) {
      ++tot[i][y[t]];
      hit[i][y[t]] += pred[t] == y[t];
    }
  });
  std::vector<std::size_t> h(K), n(K);
  for (std::size_t i = 0; i < set.size(); ++i)
    for (std::size_t k = 0; k < K; ++k) {
      h[k] += hit[i][k];
      n[k] += tot[i][k];
    }
  FrameAccuracy a;
  const std::size_t all = std::accumulate(n.begin(), n.end(), std::size_t{0});
  if (all == 0) return a;
  a.accuracy = static_cast<double>(std::accumulate(h.begin(), h.end(), std::size_t{0})) / static_cast<double>(all);
  std::size_t present = 0;
  for (std::size_t k = 0; k < K; ++k)
    if (n[k]) {
      a.balanced += static_cast<double>(h[k]) / static_cast<double>(n[k]);
      ++present;
    }
  a.balanced /= static_cast<double>(present);
  return a;
}

namespace detail {

struct SessionGrad {
  double loss = 0, unweighted = 0;
  std::size_t frames = 0;
};

// Loss and parameter gradient of one session's (strided) windows.
inline SessionGrad detector_session_grad(const Detector& det, const nn::Tensor<float>& z,
                                         const std::vector<std::uint8_t>& y, std::size_t stride,
                                         std::size_t offset, std::span<const float> weights, Detector& grad) {
  SessionGrad g;
  nn::Tensor<float> win;
  Detector::Cache cache;
  std::vector<float> logits(det.classes()), dl(det.classes()), tmp(det.classes());
  for (std::size_t t = offset % stride; t < z.rows(); t += stride) {
    det.window_at(z, t, win);
    det.forward(win, logits, &cache);
    const int target = y[t];
    g.unweighted += nn::cross_entropy_row<float>(logits, target, 1.0f, tmp);
    const float w = weights.empty() ? 1.0f : weights[static_cast<std::size_t>(target)];
    g.loss += nn::cross_entropy_row<float>(logits, target, w, dl);
    det.backward(cache, dl, grad);
    ++g.frames;
  }
  return g;
}

}  // namespace detail

// Adam on frame-wise weighted cross-entropy over sliding windows of the
// training split; the best validation balanced frame accuracy checkpoint
// is kept.
inline DetectorTrainResult train_detector(Modality m, const Dataset& data, const DetectorConfig& dc,
                                          const TrainConfig& tc, const Logger& log = {}) {
  dc.validate();
  tc.validate();
  if (dc.modality != m) throw InvalidInput("train_detector: config modality differs");
  const auto train = data.split(Split::kTrain);
  const auto val = data.split(Split::kVal);
  if (train.empty()) throw InvalidInput("train_detector: empty training split");
  for (const auto* e : train)
    if (modality_labels(*e, m).size() != e->ticks() || modality_features(*e, m).rows() != e->ticks())
      throw InvalidInput("train_detector: session " + e->id + " lacks " + detectors::modality_name(m) + " labels");

  Detector det(dc);
  {
    std::vector<const nn::Tensor<float>*> mats;
    for (const auto* e : train) mats.push_back(&modality_features(*e, m));
    det.normalizer() = detectors::Normalizer::fit(mats, dc.input_dims);
  }
  nn::Rng init_rng(mix_seed(tc.seed, 0xde7 + static_cast<std::uint64_t>(m)));
  det.init(init_rng);

  std::vector<float> weights;
  if (tc.class_weights) {
    std::vector<std::size_t> counts(dc.classes, 0);
    for (const auto* e : train)
      for (auto v : modality_labels(*e, m)) ++counts[v];
    weights = nn::inverse_frequency_weights(counts);
  }

  // Normalized copies of the training features, reused every epoch.
  std::vector<nn::Tensor<float>> z(train.size());
  parallel_for(train.size(), [&](std::size_t i) { z[i] = det.normalize(modality_features(*train[i], m)); });

  DetectorTrainResult res;
  nn::Adam<float> opt;
  std::mt19937_64 rng(mix_seed(tc.seed, 0x7a1 + static_cast<std::uint64_t>(m)));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= tc.detector_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t offset = std::uniform_int_distribution<std::size_t>(0, tc.tick_stride - 1)(rng);
    double epoch_loss = 0;
    std::size_t epoch_frames = 0;
    for (std::size_t b = 0; b < order.size(); b += tc.batch) {
      const std::size_t nb = std::min(tc.batch, order.size() - b);
      std::vector<Detector> grads(nb);
      std::vector<detail::SessionGrad> sg(nb);
      parallel_for(nb, [&](std::size_t k) {
        grads[k] = det.zeros_like();
        const std::size_t i = order[b + k];
        sg[k] = detail::detector_session_grad(det, z[i], modality_labels(*train[i], m), tc.tick_stride, offset,
                                              weights, grads[k]);
      });
      std::size_t frames = 0;
      double unweighted = 0;
      for (std::size_t k = 0; k < nb; ++k) {
        frames += sg[k].frames;
        epoch_loss += sg[k].loss;
        unweighted += sg[k].unweighted;
        if (k) nn::add_grads(grads[0], grads[k]);
      }
      if (frames == 0) continue;
      if (epoch == 1 && b == 0) res.initial_loss = unweighted / static_cast<double>(frames);
      epoch_frames += frames;
      const float scale = 1.0f / static_cast<float>(frames);
      grads[0].visit([&](const std::string&, nn::Tensor<float>& t) {
        for (auto& v : t.data) v *= scale;
      });
      opt.step(det, grads[0], tc.lr);
    }
    DetectorEpoch rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_frames ? epoch_loss / static_cast<double>(epoch_frames) : 0.0;
    const auto acc = frame_accuracy(det, val.empty() ? train : val, m);
    rec.val_accuracy = acc.accuracy;
    rec.val_balanced_accuracy = acc.balanced;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.history.push_back(rec);
    log_to(log, {{"stage", std::string("detector_") + detectors::modality_name(m)},
                 {"epoch", epoch},
                 {"train_loss", rec.train_loss},
                 {"val_accuracy", rec.val_accuracy},
                 {"val_balanced_accuracy", rec.val_balanced_accuracy},
                 {"seconds", rec.seconds}});
    if (rec.val_balanced_accuracy > res.best_val_accuracy) {
      res.best_val_accuracy = rec.val_balanced_accuracy;
      res.best_epoch = epoch;
      res.model = det;
      since_best = 0;
    } else if (tc.patience && ++since_best >= tc.patience) {
      break;
    }
  }
  return res;
}

}  // namespace rts::train
