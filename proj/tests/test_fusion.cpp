// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "rts/fusion/fsm.hpp"
#include "rts/nn/gradcheck.hpp"

namespace rf = rts::fusion;
namespace nn = rts::nn;

namespace {

nn::Tensor<float> random_inputs(std::size_t ticks, std::uint64_t seed, double scale = 2.0) {
  nn::Rng rng(seed);
  nn::Tensor<float> x({ticks, rf::kFusionDims});
  nn::fill_uniform(x, rng, -scale, scale);
  return x;
}

rf::NeuralPolicy random_policy(std::size_t h, std::uint64_t seed, rf::FusionType f = rf::FusionType::kLogit) {
  rf::PolicyConfig cfg;
  cfg.fusion = f;
  cfg.h_dim = h;
  cfg.allow_any_hidden = true;
  rf::NeuralPolicy p(cfg);
  nn::Rng rng(seed);
  p.init(rng);
  p.visit([&](const std::string& name, nn::Tensor<float>& t) {
    if (name.find(".b") != std::string::npos) nn::fill_uniform(t, rng, -0.2, 0.2);
  });
  return p;
}

// Builds a fusion row as softmax-style probabilities.
std::vector<float> row(float raising, float raised, float dropping, float dropped, float speech) {
  return {raising, raised, dropping, dropped, 1.0f - speech, speech};
}

nn::Tensor<float> trace(const std::vector<std::vector<float>>& rows) {
  nn::Tensor<float> t({rows.size(), rf::kFusionDims});
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), t.row(i).begin());
  return t;
}

rf::FsmParams unsmoothed() {
  rf::FsmParams p;
  p.s_gesture = p.s_speech = 1;
  return p;
}

}  // namespace

TEST(AlignAndMerge, ConcatenatesGestureThenSpeech) {
  nn::Tensor<float> s({1, 2}), g({1, 4});
  s.data = {0.9f, 0.1f};
  g.data = {0.7f, 0.1f, 0.1f, 0.1f};
  const auto out = rf::align_and_merge(s, g, rf::FusionType::kLogit);
  EXPECT_EQ(out.data, (std::vector<float>{0.7f, 0.1f, 0.1f, 0.1f, 0.9f, 0.1f}));
}

TEST(AlignAndMerge, LogitPassesUnboundedValues) {
  nn::Tensor<float> s({2, 2}), g({2, 4});
  s.data = {-30, 45, 2, -2};
  g.data = {100, -100, 3, 4, 5, 6, 7, 8};
  const auto out = rf::align_and_merge(s, g, rf::FusionType::kLogit);
  EXPECT_EQ(out(0, 0), 100.0f);
  EXPECT_EQ(out(0, 5), 45.0f);
  EXPECT_EQ(out(1, 4), 2.0f);
}

TEST(AlignAndMerge, SoftmaxBlocksSumToOne) {
  nn::Rng rng(4);
  nn::Tensor<float> s({50, 2}), g({50, 4});
  nn::fill_uniform(s, rng, -20, 20);
  nn::fill_uniform(g, rng, -20, 20);
  const auto out = rf::align_and_merge(s, g, rf::FusionType::kSoftmax);
  for (std::size_t t = 0; t < 50; ++t) {
    double gs = 0, ss = 0;
    for (std::size_t k = 0; k < 6; ++k) {
      EXPECT_GE(out(t, k), 0.0f);
      EXPECT_LE(out(t, k), 1.0f);
      (k < 4 ? gs : ss) += out(t, k);
    }
    EXPECT_NEAR(gs, 1.0, 1e-6);
    EXPECT_NEAR(ss, 1.0, 1e-6);
  }
}

TEST(AlignAndMerge, UnequalLengthsThrow) {
  nn::Tensor<float> s({5, 2}), g({4, 4});
  EXPECT_THROW(rf::align_and_merge(s, g, rf::FusionType::kSoftmax), rts::ShapeMismatch);
  nn::Tensor<float> bad({5, 3});
  EXPECT_THROW(rf::align_and_merge(bad, g, rf::FusionType::kSoftmax), rts::ShapeMismatch);
}

TEST(NeuralPolicy, ParameterCounts) {
  for (auto f : {rf::FusionType::kSoftmax, rf::FusionType::kLogit}) {
    rf::PolicyConfig c32{f, 32}, c64{f, 64};
    EXPECT_EQ(rf::NeuralPolicy(c32).parameter_count(), 3906u);
    EXPECT_EQ(rf::NeuralPolicy(c64).parameter_count(), 13954u);
    EXPECT_EQ(c32.parameter_count(), 3906u);
    rf::NeuralPolicy p(c64);
    EXPECT_EQ(nn::count_parameters(p), 13954u);
  }
}

TEST(NeuralPolicy, HiddenSizeRestricted) {
  rf::PolicyConfig c{rf::FusionType::kLogit, 48};
  EXPECT_THROW(rf::NeuralPolicy{c}, rts::InvalidInput);
  c.allow_any_hidden = true;
  EXPECT_NO_THROW(rf::NeuralPolicy{c});
}

TEST(NeuralPolicy, ZeroWeightsGiveHalf) {
  rf::NeuralPolicy p(rf::PolicyConfig{rf::FusionType::kSoftmax, 32});
  for (float v : p.score(random_inputs(25, 1))) EXPECT_NEAR(v, 0.5f, 1e-7);
}

TEST(NeuralPolicy, StreamingMatchesBatch) {
  const auto p = random_policy(64, 3);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto x = random_inputs(60, 10 + s);
    const auto batch = p.score(x);
    rf::PolicyStream stream(p);
    for (std::size_t t = 0; t < x.rows(); ++t) ASSERT_NEAR(stream.step(x.row(t)), batch[t], 1e-6);
  }
}

TEST(NeuralPolicy, ResetChangesOutputsVersusCarriedState) {
  const auto p = random_policy(32, 5);
  // Session A drives the state far from zero; B is a short constant trace.
  const auto a = random_inputs(40, 6, 5.0);
  const auto b = random_inputs(5, 7, 0.1);
  rf::PolicyStream carried(p), fresh(p);
  for (std::size_t t = 0; t < a.rows(); ++t) carried.step(a.row(t));
  double diff = 0;
  for (std::size_t t = 0; t < b.rows(); ++t) diff += std::abs(carried.step(b.row(t)) - fresh.step(b.row(t)));
  EXPECT_GT(diff, 1e-3);
  carried.reset();
  fresh.reset();
  for (std::size_t t = 0; t < b.rows(); ++t) EXPECT_EQ(carried.step(b.row(t)), fresh.step(b.row(t)));
}

TEST(NeuralPolicy, NonFiniteInputThrows) {
  const auto p = random_policy(32, 5);
  auto x = random_inputs(3, 1);
  x(1, 2) = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(p.score(x), rts::NumericError);
  rf::PolicyStream s(p);
  EXPECT_THROW(s.step(x.row(1)), rts::NumericError);
}

TEST(NeuralPolicy, SessionLossGradientMatchesFiniteDifferences) {
  auto p = random_policy(5, 9);
  const auto x = random_inputs(30, 10);
  std::vector<std::uint8_t> y(30);
  for (std::size_t t = 0; t < 30; ++t) y[t] = (t / 7) % 2;
  const std::vector<float> w = {0.7f, 1.6f};
  auto grad = p.zeros_like();
  p.session_loss(x, y, w, &grad);
  auto params = nn::collect_params(p);
  auto grads = nn::collect_params(grad);
  std::mt19937_64 rng(2);
  double worst = 0;
  std::size_t checked = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& d = params[k].second->data;
    std::uniform_int_distribution<std::size_t> pick(0, d.size() - 1);
    for (int s = 0; s < 30; ++s) {
      const std::size_t i = pick(rng);
      const float saved = d[i], h = 1e-2f;
      d[i] = saved + h;
      const double up = p.session_loss(x, y, w, nullptr);
      d[i] = saved - h;
      const double down = p.session_loss(x, y, w, nullptr);
      d[i] = saved;
      const double num = (up - down) / (2.0 * h), ana = grads[k].second->data[i];
      worst = std::max(worst, std::abs(num - ana) / std::max({std::abs(num), std::abs(ana), 1e-2}));
      ++checked;
    }
  }
  EXPECT_EQ(checked, 180u);
  EXPECT_LT(worst, 1e-2);
}

TEST(NeuralPolicy, CheckpointRoundTrip) {
  const auto p = random_policy(64, 12, rf::FusionType::kSoftmax);
  const auto back = rf::NeuralPolicy::from_checkpoint(nn::decode_checkpoint(nn::encode_checkpoint(p.to_checkpoint())));
  EXPECT_EQ(back.config().fusion, rf::FusionType::kSoftmax);
  EXPECT_EQ(back.hidden_dim(), 64u);
  const auto x = random_inputs(20, 13);
  EXPECT_EQ(p.score(x), back.score(x));
}

TEST(DecideTriggers, ConstantZeroHasNoEvents) {
  std::vector<float> p(100, 0.0f);
  EXPECT_TRUE(rf::decide_triggers(p, 0.5).empty());
}

TEST(DecideTriggers, RisingEdgeAtTickTen) {
  std::vector<float> p(20, 0.0f);
  std::fill(p.begin() + 10, p.end(), 1.0f);
  const auto ev = rf::decide_triggers(p, 0.5);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].tick, 10u);
  EXPECT_EQ(ev[0].peak, 1.0f);
}

TEST(DecideTriggers, CooldownSuppressesCloseCrossings) {
  std::vector<float> p(100, 0.0f);
  p[10] = p[11] = 0.9f;
  p[45] = 0.8f;  // 35 ticks later: a second event
  p[60] = 0.95f; // 15 ticks after that: suppressed
  const auto ev = rf::decide_triggers(p, 0.5);
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_EQ(ev[0].tick, 10u);
  EXPECT_EQ(ev[1].tick, 45u);
  EXPECT_EQ(rf::decide_triggers(p, 0.5, 10).size(), 3u);
}

TEST(DecideTriggers, ThetaOutOfRangeThrows) {
  std::vector<float> p(3, 0.2f);
  EXPECT_THROW(rf::decide_triggers(p, 0.0), rts::InvalidInput);
  EXPECT_THROW(rf::decide_triggers(p, 1.0), rts::InvalidInput);
  EXPECT_THROW(rf::decide_triggers(p, std::nan("")), rts::InvalidInput);
}

// Upcrossing counts are not monotone in theta in general: a dip between two
// peaks is crossed only by thresholds above the dip.
TEST(DecideTriggers, EventCountNotMonotoneOnMultiPeakTrace) {
  std::vector<float> p(100, 0.0f);
  std::fill(p.begin() + 10, p.begin() + 20, 0.9f);
  std::fill(p.begin() + 20, p.begin() + 60, 0.5f);
  std::fill(p.begin() + 60, p.begin() + 70, 0.9f);
  EXPECT_EQ(rf::decide_triggers(p, 0.4).size(), 1u);
  EXPECT_EQ(rf::decide_triggers(p, 0.7).size(), 2u);
}

TEST(DecideTriggers, MonotoneOnUnimodalTraces) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<float> p(80);
    const std::size_t peak = 10 + trial % 60;
    float v = 0;
    for (std::size_t t = 0; t <= peak; ++t) p[t] = v = std::min(1.0f, v + 0.1f * u(rng));
    for (std::size_t t = peak + 1; t < p.size(); ++t) p[t] = v = std::max(0.0f, v - 0.1f * u(rng));
    std::size_t prev = 1000;
    for (double th = 0.01; th < 1.0; th += 0.01) {
      const auto n = rf::decide_triggers(p, th).size();
      EXPECT_LE(n, prev);
      prev = n;
    }
  }
}

TEST(Fsm, ConstantDroppedNeverTriggers) {
  std::vector<std::vector<float>> rows(200, row(0, 0, 0, 1, 1));
  EXPECT_TRUE(rf::run_fsm(rf::FsmParams{}, rf::FsmInput::kSoftmax, trace(rows)).empty());
}

// Hand-simulated with d_raising 2, d_raised 3, d_speech 3 and no smoothing:
// RAISING entered at tick 6, LISTENING at tick 10, speech from tick 15, so
// the third consecutive speech tick is 17.
TEST(Fsm, IdealTraceTriggersOnce) {
  std::vector<std::vector<float>> rows;
  for (int t = 0; t < 5; ++t) rows.push_back(row(0, 0, 0, 1, 0));
  for (int t = 5; t < 8; ++t) rows.push_back(row(1, 0, 0, 0, 0));
  for (int t = 8; t < 15; ++t) rows.push_back(row(0, 1, 0, 0, 0));
  for (int t = 15; t < 60; ++t) rows.push_back(row(0, 1, 0, 0, 1));
  const auto ev = rf::run_fsm(unsmoothed(), rf::FsmInput::kSoftmax, trace(rows));
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].tick, 15u + unsmoothed().d_speech - 1);
  EXPECT_EQ(ev[0].policy, "fsm");
}

TEST(Fsm, LateSpeechDoesNotTrigger) {
  // LISTENING starts at tick 10 and expires t_onset = 25 ticks later.
  std::vector<std::vector<float>> rows;
  for (int t = 0; t < 5; ++t) rows.push_back(row(0, 0, 0, 1, 0));
  for (int t = 5; t < 8; ++t) rows.push_back(row(1, 0, 0, 0, 0));
  for (int t = 8; t < 36; ++t) rows.push_back(row(0, 1, 0, 0, 0));
  for (int t = 36; t < 60; ++t) rows.push_back(row(0, 1, 0, 0, 1));
  EXPECT_TRUE(rf::run_fsm(unsmoothed(), rf::FsmInput::kSoftmax, trace(rows)).empty());
  // Speech one tick earlier completes d_speech exactly at the deadline.
  for (int t = 33; t < 36; ++t) rows[static_cast<std::size_t>(t)] = row(0, 1, 0, 0, 1);
  EXPECT_EQ(rf::run_fsm(unsmoothed(), rf::FsmInput::kSoftmax, trace(rows)).size(), 1u);
}

TEST(Fsm, DropAbortsListening) {
  std::vector<std::vector<float>> rows;
  for (int t = 0; t < 2; ++t) rows.push_back(row(1, 0, 0, 0, 0));
  for (int t = 2; t < 5; ++t) rows.push_back(row(0, 1, 0, 0, 0));
  rows.push_back(row(0, 0, 0, 1, 0));
  for (int t = 6; t < 20; ++t) rows.push_back(row(0, 0, 0, 0, 1));
  EXPECT_TRUE(rf::run_fsm(unsmoothed(), rf::FsmInput::kSoftmax, trace(rows)).empty());
}

TEST(Fsm, HysteresisKeepsRunAlive) {
  auto p = unsmoothed();
  p.delta = 0.1;
  std::vector<std::vector<float>> rows;
  for (int t = 0; t < 2; ++t) rows.push_back(row(1, 0, 0, 0, 0));
  for (int t = 2; t < 5; ++t) rows.push_back(row(0, 1, 0, 0, 0));
  rows.push_back(row(0, 1, 0, 0, 0.6f));
  rows.push_back(row(0, 1, 0, 0, 0.45f));  // below theta, above theta - delta
  rows.push_back(row(0, 1, 0, 0, 0.45f));
  for (int t = 0; t < 10; ++t) rows.push_back(row(0, 1, 0, 0, 0));
  EXPECT_EQ(rf::run_fsm(p, rf::FsmInput::kSoftmax, trace(rows)).size(), 1u);
  p.delta = 0.0;
  EXPECT_TRUE(rf::run_fsm(p, rf::FsmInput::kSoftmax, trace(rows)).empty());
}

TEST(Fsm, DeterministicAndTextRoundTrip) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 20; ++i) {
    const auto p = rf::FsmParams::sample(rng);
    EXPECT_NO_THROW(p.validate());
    const auto back = rf::FsmParams::from_text(p.to_text());
    EXPECT_EQ(back, p);
    const auto x = random_inputs(200, 30 + i, 4.0);
    const auto a = rf::run_fsm(p, rf::FsmInput::kLogit, x);
    const auto b = rf::run_fsm(back, rf::FsmInput::kLogit, x);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k].tick, b[k].tick);
  }
}

TEST(Fsm, TextRejectsBadConfigs) {
  const std::string good = rf::FsmParams{}.to_text();
  EXPECT_THROW(rf::FsmParams::from_text("theta_raising = 0.5\n"), rts::FormatError);
  EXPECT_THROW(rf::FsmParams::from_text(good + "bogus = 1\n"), rts::FormatError);
  std::string bad = good;
  bad.replace(bad.find("d_speech = 3"), 12, "d_speech = 2.5");
  EXPECT_THROW(rf::FsmParams::from_text(bad), rts::FormatError);
  bad = good;
  bad.replace(bad.find("theta_speech = 0.5"), 18, "theta_speech = 1.5");
  EXPECT_THROW(rf::FsmParams::from_text(bad), rts::InvalidInput);
}

TEST(Fsm, ScalingRaisesEntryThresholdsOnly) {
  const auto p = rf::FsmParams{}.scaled(1.5);
  EXPECT_DOUBLE_EQ(p.theta_raising, 0.75);
  EXPECT_DOUBLE_EQ(p.theta_speech, 0.75);
  EXPECT_DOUBLE_EQ(p.theta_dropped, 0.6);
  EXPECT_DOUBLE_EQ(rf::FsmParams{}.scaled(3.0).theta_raised, 1.0);
}
