// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <deque>
#include <span>
#include <vector>

#include "rts/common.hpp"
#include "rts/features/gesture.hpp"
#include "rts/features/mel.hpp"
#include "rts/nn/tensor.hpp"

namespace rts::features {

// Per-tick audio block: 10 consecutive mel frames, frame-major.
inline constexpr std::size_t kAudioTickDims = kMelBands * kMelFramesPerTick;

struct Timeline {
  std::size_t ticks = 0;
  std::size_t audio_ticks = 0;  // before tail padding
  std::size_t accel_ticks = 0;
  nn::Tensor<float> audio;      // [ticks x 400]
  nn::Tensor<float> gesture;    // [ticks x 31]

  double timestamp(std::size_t t) const { return static_cast<double>(t) * kTickSeconds; }
};

inline std::size_t audio_tick_count(std::size_t samples) { return samples / kAudioSamplesPerTick; }
inline std::size_t accel_tick_count(std::size_t samples) { return samples / kAccelSamplesPerTick; }

// Gesture window for tick t: the 100 samples ending at sample 10(t+1);
// indices before the stream start replicate the first sample.
inline void gesture_window(std::span<const float> accel, std::size_t t, std::span<float> out) {
  const long end = static_cast<long>(kAccelSamplesPerTick * (t + 1));
  for (std::size_t i = 0; i < kGestureWindow; ++i) {
    const long idx = std::max(0L, end - static_cast<long>(kGestureWindow) + static_cast<long>(i));
    for (std::size_t c = 0; c < 3; ++c) out[3 * i + c] = accel[3 * static_cast<std::size_t>(idx) + c];
  }
}

// Batch featurization of one session. accel is interleaved (x, y, z).
inline Timeline featurize(std::span<const float> audio, std::span<const float> accel) {
  if (accel.size() % 3 != 0) throw ShapeMismatch("accel stream must have 3 channels");
  const std::size_t n_accel = accel.size() / 3;
  Timeline tl;
  tl.audio_ticks = audio_tick_count(audio.size());
  tl.accel_ticks = accel_tick_count(n_accel);
  tl.ticks = std::max(tl.audio_ticks, tl.accel_ticks);
  if (tl.ticks == 0) throw InvalidInput("featurize: both streams shorter than one tick");
  tl.audio = nn::Tensor<float>({tl.ticks, kAudioTickDims});
  tl.gesture = nn::Tensor<float>({tl.ticks, kGestureDims});

  if (tl.audio_ticks > 0) {
    const auto frames = mel_featurize(audio);
    for (std::size_t t = 0; t < tl.audio_ticks; ++t)
      for (std::size_t i = 0; i < kMelFramesPerTick; ++i) {
        const std::size_t j = std::min(t * kMelFramesPerTick + i, frames.size() - 1);
        std::copy(frames[j].values.begin(), frames[j].values.end(),
                  tl.audio.row(t).begin() + static_cast<long>(i * kMelBands));
      }
    for (std::size_t t = tl.audio_ticks; t < tl.ticks; ++t) {
      auto src = tl.audio.row(tl.audio_ticks - 1);
      std::copy(src.begin(), src.end(), tl.audio.row(t).begin());
    }
  }
  if (tl.accel_ticks > 0) {
    std::vector<float> win(kGestureWindow * 3);
    for (std::size_t t = 0; t < tl.accel_ticks; ++t) {
      gesture_window(accel, t, win);
      const auto g = gesture_featurize(win);
      std::copy(g.begin(), g.end(), tl.gesture.row(t).begin());
    }
    for (std::size_t t = tl.accel_ticks; t < tl.ticks; ++t) {
      auto src = tl.gesture.row(tl.accel_ticks - 1);
      std::copy(src.begin(), src.end(), tl.gesture.row(t).begin());
    }
  }
  return tl;
}

struct TickFrame {
  std::size_t tick = 0;
  double timestamp = 0.0;
  std::array<float, kAudioTickDims> audio{};
  GestureVector gesture{};
};

// Incremental featurizer. Push arbitrary chunks of either stream, collect
// aligned ticks from poll(), then finish() to flush tail padding. The
// output equals featurize() on the concatenated input for any chunking.
class StreamingFeaturizer {
 public:
  void push_audio(std::span<const float> samples) {
    if (finished_) throw InvalidInput("streaming featurizer: push after finish");
    audio_buf_.insert(audio_buf_.end(), samples.begin(), samples.end());
    audio_total_ += samples.size();
    // Analyze every complete mel frame.
    while (true) {
      const std::size_t start = mel_done_ * kMelHop;
      if (start + kMelWindow > audio_total_) break;
      std::array<float, kMelBands> v;
      analyzer_.analyze(std::span<const float>(audio_buf_.data() + (start - audio_base_), kMelWindow), v);
      mel_.push_back(v);
      ++mel_done_;
    }
    // Drop samples no future frame needs.
    const std::size_t keep_from = mel_done_ * kMelHop;
    if (keep_from > audio_base_ + 8 * kMelWindow) {
      audio_buf_.erase(audio_buf_.begin(), audio_buf_.begin() + static_cast<long>(keep_from - audio_base_));
      audio_base_ = keep_from;
    }
    while (mel_done_ >= (audio_rows_done_ + 1) * kMelFramesPerTick) emit_audio_row(mel_done_);
  }

  void push_accel(std::span<const float> values) {
    if (finished_) throw InvalidInput("streaming featurizer: push after finish");
    for (float v : values) {
      partial_[partial_n_++] = v;
      if (partial_n_ < 3) continue;
      partial_n_ = 0;
      if (accel_total_ == 0) first_ = partial_;
      accel_hist_.push_back(partial_);
      if (accel_hist_.size() > kGestureWindow) accel_hist_.pop_front();
      ++accel_total_;
      if (accel_total_ % kAccelSamplesPerTick == 0) emit_gesture_row();
    }
  }

  std::vector<TickFrame> poll() {
    std::vector<TickFrame> out;
    while (!audio_rows_.empty() && !gesture_rows_.empty()) {
      out.push_back(make_tick(audio_rows_.front(), gesture_rows_.front()));
      audio_rows_.pop_front();
      gesture_rows_.pop_front();
    }
    return out;
  }

  std::vector<TickFrame> finish() {
    if (finished_) return {};
    finished_ = true;
    if (partial_n_ != 0) throw ShapeMismatch("accel stream must have 3 channels");
    const std::size_t a_ticks = audio_tick_count(audio_total_);
    const std::size_t g_ticks = accel_tick_count(accel_total_);
    const std::size_t ticks = std::max(a_ticks, g_ticks);
    if (ticks == 0) throw InvalidInput("featurize: both streams shorter than one tick");
    while (audio_rows_done_ < a_ticks) emit_audio_row(mel_done_);
    while (audio_rows_done_ < ticks) {
      audio_rows_.push_back(last_audio_);
      ++audio_rows_done_;
    }
    while (gesture_rows_done_ < ticks) {
      gesture_rows_.push_back(last_gesture_);
      ++gesture_rows_done_;
    }
    return poll();
  }

  std::size_t ticks_emitted() const { return emitted_; }

 private:
  using AudioRow = std::array<float, kAudioTickDims>;

  // Builds audio row audio_rows_done_ from frames [0, available).
  void emit_audio_row(std::size_t available) {
    const std::size_t t = audio_rows_done_;
    AudioRow row{};
    for (std::size_t i = 0; i < kMelFramesPerTick; ++i) {
      const std::size_t j = std::min(t * kMelFramesPerTick + i, available - 1);
      const auto& f = mel_[j - mel_base_];
      std::copy(f.begin(), f.end(), row.begin() + static_cast<long>(i * kMelBands));
    }
    audio_rows_.push_back(row);
    last_audio_ = row;
    ++audio_rows_done_;
    // Frames before the next tick's block are no longer needed, except the
    // newest one, which padding may repeat.
    const std::size_t need = std::min(audio_rows_done_ * kMelFramesPerTick, available - 1);
    while (mel_base_ < need) {
      mel_.pop_front();
      ++mel_base_;
    }
  }

  void emit_gesture_row() {
    std::array<float, kGestureWindow * 3> win;
    const std::size_t have = accel_hist_.size();
    for (std::size_t i = 0; i < kGestureWindow; ++i) {
      const auto& s = i + have >= kGestureWindow ? accel_hist_[i + have - kGestureWindow] : first_;
      for (std::size_t c = 0; c < 3; ++c) win[3 * i + c] = s[c];
    }
    last_gesture_ = gesture_featurize(win);
    gesture_rows_.push_back(last_gesture_);
    ++gesture_rows_done_;
  }

  TickFrame make_tick(const AudioRow& a, const GestureVector& g) {
    TickFrame f;
    f.tick = emitted_;
    f.timestamp = static_cast<double>(emitted_) * kTickSeconds;
    f.audio = a;
    f.gesture = g;
    ++emitted_;
    return f;
  }

  MelFrameAnalyzer analyzer_;
  std::vector<float> audio_buf_;
  std::size_t audio_base_ = 0, audio_total_ = 0;
  std::deque<std::array<float, kMelBands>> mel_;
  std::size_t mel_base_ = 0, mel_done_ = 0;
  std::size_t audio_rows_done_ = 0;

  std::array<float, 3> partial_{};
  std::size_t partial_n_ = 0;
  std::array<float, 3> first_{};
  std::deque<std::array<float, 3>> accel_hist_;
  std::size_t accel_total_ = 0;
  std::size_t gesture_rows_done_ = 0;

  std::deque<AudioRow> audio_rows_;
  std::deque<GestureVector> gesture_rows_;
  AudioRow last_audio_{};
  GestureVector last_gesture_{};
  std::size_t emitted_ = 0;
  bool finished_ = false;
};

}  // namespace rts::features
