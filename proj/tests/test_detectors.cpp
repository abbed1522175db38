// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "rts/detectors/detector.hpp"
#include "rts/nn/gradcheck.hpp"

namespace rdet = rts::detectors;
namespace nn = rts::nn;

namespace {

nn::Tensor<float> random_features(std::size_t ticks, std::size_t dims, std::uint64_t seed) {
  nn::Rng rng(seed);
  nn::Tensor<float> f({ticks, dims});
  nn::fill_uniform(f, rng, -2.0, 2.0);
  return f;
}

rdet::Detector random_detector(const rdet::DetectorConfig& cfg, std::uint64_t seed) {
  rdet::Detector d(cfg);
  nn::Rng rng(seed);
  d.init(rng);
  // Non-trivial biases and normalizer so every path is exercised.
  d.visit([&](const std::string& name, nn::Tensor<float>& t) {
    if (name.find("bias") != std::string::npos) nn::fill_uniform(t, rng, -0.1, 0.1);
  });
  for (std::size_t i = 0; i < cfg.input_dims; ++i) {
    d.normalizer().mean[i] = 0.1f * static_cast<float>(i % 7);
    d.normalizer().inv_std[i] = 0.5f + 0.01f * static_cast<float>(i % 13);
  }
  return d;
}

}  // namespace

TEST(DetectorConfig, ParameterCounts) {
  // conv 16x5xC+16, dense W*16->128, 128->32, 32->K.
  const std::size_t speech1 = 16 * 5 * 400 + 16 + 160 * 128 + 128 + 128 * 32 + 32 + 32 * 2 + 2;
  const std::size_t gesture1 = 16 * 5 * 31 + 16 + 320 * 128 + 128 + 128 * 32 + 32 + 32 * 4 + 4;
  const std::size_t extra = 16 * 5 * 16 + 16;
  EXPECT_EQ(rdet::DetectorConfig::speech(1).parameter_count(), speech1);
  EXPECT_EQ(rdet::DetectorConfig::gesture(1).parameter_count(), gesture1);
  EXPECT_EQ(rdet::DetectorConfig::speech(3).parameter_count(), speech1 + 2 * extra);
  EXPECT_EQ(rdet::DetectorConfig::gesture(5).parameter_count(), gesture1 + 4 * extra);
  for (std::size_t n : {1u, 3u, 5u}) {
    rdet::Detector s(rdet::DetectorConfig::speech(n)), g(rdet::DetectorConfig::gesture(n));
    EXPECT_EQ(s.parameter_count(), rdet::DetectorConfig::speech(n).parameter_count());
    EXPECT_EQ(nn::count_parameters(g), rdet::DetectorConfig::gesture(n).parameter_count());
  }
}

TEST(DetectorConfig, RejectsBadShapes) {
  auto c = rdet::DetectorConfig::speech(1);
  c.n_conv_layers = 2;
  EXPECT_THROW(rdet::Detector{c}, rts::InvalidInput);
  c = rdet::DetectorConfig::gesture(1);
  c.classes = 2;
  EXPECT_THROW(rdet::Detector{c}, rts::InvalidInput);
}

TEST(Detector, ZeroWeightsGiveUniformSoftmax) {
  for (auto cfg : {rdet::DetectorConfig::speech(3), rdet::DetectorConfig::gesture(1)}) {
    rdet::Detector d(cfg);
    const auto logits = d.forward_session(random_features(12, cfg.input_dims, 1));
    for (std::size_t t = 0; t < logits.rows(); ++t) {
      const auto p = nn::softmax(logits.row(t));
      for (float v : p) EXPECT_NEAR(v, 1.0f / static_cast<float>(cfg.classes), 1e-7);
    }
  }
}

TEST(Detector, TiesGoToLowerClass) {
  rdet::Detector d(rdet::DetectorConfig::gesture(1));
  const auto labels = d.predict_labels(random_features(5, 31, 2));
  for (auto l : labels) EXPECT_EQ(l, 0);
}

TEST(Detector, WrongFeatureWidthThrows) {
  rdet::Detector d(rdet::DetectorConfig::speech(1));
  EXPECT_THROW(d.forward_session(random_features(5, 31, 2)), rts::ShapeMismatch);
}

TEST(Detector, WindowZeroPadsBeforeStart) {
  const auto cfg = rdet::DetectorConfig::gesture(1);
  rdet::Detector d(cfg);
  const auto f = random_features(4, cfg.input_dims, 3);
  nn::Tensor<float> w;
  d.window_at(f, 2, w);
  ASSERT_EQ(w.rows(), 20u);
  for (std::size_t i = 0; i < 17; ++i)
    for (std::size_t c = 0; c < cfg.input_dims; ++c) EXPECT_EQ(w(i, c), 0.0f);
  for (std::size_t c = 0; c < cfg.input_dims; ++c) {
    EXPECT_EQ(w(17, c), f(0, c));
    EXPECT_EQ(w(19, c), f(2, c));
  }
}

TEST(Detector, StreamingMatchesBatch) {
  for (auto cfg : {rdet::DetectorConfig::speech(1), rdet::DetectorConfig::gesture(3)}) {
    const auto d = random_detector(cfg, 5);
    const auto feats = random_features(45, cfg.input_dims, 6);
    const auto batch = d.forward_session(feats);
    rdet::DetectorStream stream(d);
    for (std::size_t t = 0; t < feats.rows(); ++t) {
      const auto out = stream.step(feats.row(t), 0.1 * static_cast<double>(t + 1));
      for (std::size_t k = 0; k < cfg.classes; ++k) ASSERT_NEAR(out[k], batch(t, k), 1e-6);
    }
    stream.reset();
    const auto again = stream.step(feats.row(0), 0.1);
    EXPECT_NEAR(again[0], batch(0, 0), 1e-6);
  }
}

TEST(Detector, StreamRejectsOutOfOrderTimestamps) {
  const auto d = random_detector(rdet::DetectorConfig::gesture(1), 7);
  rdet::DetectorStream stream(d);
  const auto f = random_features(3, 31, 8);
  stream.step(f.row(0), 0.1);
  stream.step(f.row(1), 0.2);
  EXPECT_THROW(stream.step(f.row(2), 0.2), rts::InvalidInput);
  EXPECT_THROW(stream.step(f.row(2), 0.15), rts::InvalidInput);
}

// Full-network backward against central differences of the summed
// cross-entropy over a few windows (float arithmetic, small shapes).
// Samples whose perturbation flips any ReLU are skipped: the loss has a
// kink there and the difference quotient is not a derivative estimate.
TEST(Detector, BackwardMatchesFiniteDifferences) {
  rdet::DetectorConfig cfg = rdet::DetectorConfig::gesture(3);
  cfg.input_dims = 6;
  cfg.window = 6;
  rdet::Detector d = random_detector(cfg, 11);
  const auto feats = d.normalize(random_features(8, cfg.input_dims, 12));
  const std::vector<int> targets = {0, 1, 2, 3, 1, 2, 3, 0};

  std::vector<bool> mask;
  auto loss_and_grad = [&](rdet::Detector* grad) {
    double total = 0;
    mask.clear();
    nn::Tensor<float> win;
    std::vector<float> logits(4), dl(4);
    rdet::Detector::Cache cache;
    for (std::size_t t = 0; t < feats.rows(); ++t) {
      d.window_at(feats, t, win);
      d.forward(win, logits, &cache);
      total += nn::cross_entropy_row<float>(logits, targets[t], 1.0f, dl);
      if (grad) d.backward(cache, dl, *grad);
      for (std::size_t l = 1; l < cache.act.size(); ++l)
        for (float v : cache.act[l].data) mask.push_back(v > 0);
      for (float v : cache.h1) mask.push_back(v > 0);
      for (float v : cache.h2) mask.push_back(v > 0);
    }
    return total;
  };
  rdet::Detector grad = d.zeros_like();
  loss_and_grad(&grad);
  const auto base_mask = mask;
  auto params = nn::collect_params(d);
  auto grads = nn::collect_params(grad);
  std::mt19937_64 rng(13);
  double worst = 0;
  std::string worst_name;
  std::size_t checked = 0, skipped = 0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& data = params[p].second->data;
    std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
    for (int s = 0; s < 25; ++s) {
      const std::size_t i = pick(rng);
      const float saved = data[i];
      const float h = 1e-2f;
      data[i] = saved + h;
      const double up = loss_and_grad(nullptr);
      const bool kink_up = mask != base_mask;
      data[i] = saved - h;
      const double down = loss_and_grad(nullptr);
      const bool kink_down = mask != base_mask;
      data[i] = saved;
      if (kink_up || kink_down) {
        ++skipped;
        continue;
      }
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = grads[p].second->data[i];
      const double rel = std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-2});
      ++checked;
      if (rel > worst) {
        worst = rel;
        worst_name = params[p].first;
      }
    }
  }
  EXPECT_GT(checked, 150u);
  EXPECT_LT(skipped, checked);
  EXPECT_LT(worst, 2e-2) << worst_name;
}

TEST(Detector, TrainingStepsReduceLoss) {
  rdet::DetectorConfig cfg = rdet::DetectorConfig::speech(1);
  cfg.input_dims = 8;
  rdet::Detector d(cfg);
  nn::Rng rng(3);
  d.init(rng);
  auto feats = random_features(40, 8, 4);
  std::vector<int> y(40);
  for (std::size_t t = 0; t < 40; ++t) y[t] = feats(t, 0) > 0 ? 1 : 0;
  nn::Adam<float> opt;
  auto epoch = [&](bool step) {
    rdet::Detector grad = d.zeros_like();
    nn::Tensor<float> win;
    std::vector<float> logits(2), dl(2);
    rdet::Detector::Cache cache;
    double total = 0;
    for (std::size_t t = 0; t < 40; ++t) {
      d.window_at(feats, t, win);
      d.forward(win, logits, &cache);
      total += nn::cross_entropy_row<float>(logits, y[t], 1.0f / 40, dl);
      d.backward(cache, dl, grad);
    }
    if (step) opt.step(d, grad, 1e-3);
    return total;
  };
  const double first = epoch(true);
  for (int i = 0; i < 60; ++i) epoch(true);
  EXPECT_LT(epoch(false), 0.5 * first);
}

TEST(Detector, NormalizerFitMoments) {
  nn::Tensor<float> a({3, 2}), b({1, 2});
  a.data = {1, 10, 2, 10, 3, 10};
  b.data = {4, 10};
  const auto z = rdet::Normalizer::fit({&a, &b}, 2);
  EXPECT_NEAR(z.mean[0], 2.5f, 1e-6);
  EXPECT_NEAR(z.inv_std[0], 1.0 / std::sqrt(1.25 + 1e-6), 1e-5);
  EXPECT_NEAR(z.mean[1], 10.0f, 1e-6);
  EXPECT_NEAR(z.inv_std[1], 1.0 / std::sqrt(1e-6), 1.0);
}

TEST(Detector, CheckpointRoundTrip) {
  namespace fs = std::filesystem;
  const auto cfg = rdet::DetectorConfig::gesture(3);
  const auto d = random_detector(cfg, 21);
  const auto path = (fs::temp_directory_path() / "rts_det.ckpt").string();
  nn::save_checkpoint(path, d.to_checkpoint());
  const auto back = rdet::Detector::from_checkpoint(nn::load_checkpoint(path), &cfg);
  EXPECT_EQ(back.config(), cfg);
  const auto f = random_features(25, cfg.input_dims, 22);
  const auto a = d.forward_session(f), b = back.forward_session(f);
  EXPECT_EQ(a.data, b.data);

  const auto other = rdet::DetectorConfig::gesture(1);
  EXPECT_THROW(rdet::Detector::from_checkpoint(nn::load_checkpoint(path), &other), rts::ShapeMismatch);
  auto ck = d.to_checkpoint();
  ck.chunks.erase("CONF");
  EXPECT_THROW(rdet::Detector::from_checkpoint(ck), rts::FormatError);
  fs::remove(path);
}

TEST(Detector, FP16CheckpointStaysClose) {
  const auto cfg = rdet::DetectorConfig::speech(1);
  const auto d = random_detector(cfg, 31);
  const auto q = rdet::Detector::from_checkpoint(nn::quantize_fp16(d.to_checkpoint()));
  const auto f = random_features(10, cfg.input_dims, 32);
  const auto a = d.forward_session(f), b = q.forward_session(f);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.data[i], b.data[i], 2e-2);
}
