// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "rts/common.hpp"

namespace rts::features {

inline constexpr std::size_t kMelBands = 40;
inline constexpr std::size_t kMelWindow = 400;  // 25 ms at 16 kHz
inline constexpr std::size_t kMelHop = 160;     // 10 ms
inline constexpr std::size_t kFftSize = 512;
inline constexpr float kLogFloor = 1e-10f;
inline constexpr std::size_t kMelFramesPerTick = 10;

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular filters with unit peak, spaced evenly on the mel scale between
// lo_hz and hi_hz. Weights are evaluated at exact bin frequencies, so narrow
// low-frequency filters never collapse onto a single bin boundary.
class MelFilterbank {
 public:
  MelFilterbank(std::size_t n_filters = kMelBands, std::size_t fft_size = kFftSize,
                int sample_rate = kAudioRate, double lo_hz = 0.0,
                double hi_hz = kAudioRate / 2.0)
      : n_filters_(n_filters), n_bins_(fft_size / 2 + 1) {
    if (n_filters == 0) throw InvalidInput("mel filterbank: need at least one filter");
    if (fft_size < 2) throw InvalidInput("mel filterbank: fft size too small");
    const double mlo = hz_to_mel(lo_hz), mhi = hz_to_mel(hi_hz);
    std::vector<double> edges(n_filters + 2);
    for (std::size_t i = 0; i < edges.size(); ++i)
      edges[i] = mel_to_hz(mlo + (mhi - mlo) * static_cast<double>(i) / (n_filters + 1));
    centers_.assign(edges.begin() + 1, edges.end() - 1);
    const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(fft_size);
    first_bin_.resize(n_filters);
    weights_.resize(n_filters);
    for (std::size_t k = 0; k < n_filters; ++k) {
      const double l = edges[k], c = edges[k + 1], r = edges[k + 2];
      std::size_t first = n_bins_;
      std::vector<float> w;
      double total = 0.0;
      for (std::size_t b = 0; b < n_bins_; ++b) {
        const double f = static_cast<double>(b) * bin_hz;
        const double v = std::max(0.0, std::min((f - l) / (c - l), (r - f) / (r - c)));
        if (v > 0.0) {
          if (first == n_bins_) first = b;
          w.resize(b - first + 1, 0.0f);
          w[b - first] = static_cast<float>(v);
          total += v;
        }
      }
      if (total <= 0.0)
        throw InvalidInput("mel filterbank: fft size " + std::to_string(fft_size) +
                           " too small for " + std::to_string(n_filters) + " filters");
      first_bin_[k] = first;
      weights_[k] = std::move(w);
    }
  }

  std::size_t filters() const { return n_filters_; }
  std::size_t bins() const { return n_bins_; }
  const std::vector<double>& centers_hz() const { return centers_; }

  float weight(std::size_t filter, std::size_t bin) const {
    const std::size_t f = first_bin_[filter];
    if (bin < f || bin >= f + weights_[filter].size()) return 0.0f;
    return weights_[filter][bin - f];
  }

  void apply(std::span<const float> power, std::span<float> out) const {
    for (std::size_t k = 0; k < n_filters_; ++k) {
      const float* p = power.data() + first_bin_[k];
      const auto& w = weights_[k];
      double acc = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) acc += static_cast<double>(w[i]) * p[i];
      out[k] = static_cast<float>(acc);
    }
  }

 private:
  std::size_t n_filters_;
  std::size_t n_bins_;
  std::vector<double> centers_;
  std::vector<std::size_t> first_bin_;
  std::vector<std::vector<float>> weights_;
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwPlanDeleter {
  void operator()(fftwf_plan_s* p) const {
    std::lock_guard lock(fftw_planner_mutex());
    fftwf_destroy_plan(p);
  }
};

struct FftwFree {
  void operator()(void* p) const { fftwf_free(p); }
};

}  // namespace detail

// Log-mel analysis of single 25 ms frames: Hann window, 512-point real FFT,
// power spectrum, 40 triangular mel bands, natural log with a 1e-10 floor.
class MelFrameAnalyzer {
 public:
  MelFrameAnalyzer()
      : in_(static_cast<float*>(fftwf_malloc(sizeof(float) * kFftSize))),
        out_(static_cast<fftwf_complex*>(fftwf_malloc(sizeof(fftwf_complex) * (kFftSize / 2 + 1)))),
        window_(kMelWindow), power_(kFftSize / 2 + 1) {
    {
      std::lock_guard lock(detail::fftw_planner_mutex());
      plan_.reset(fftwf_plan_dft_r2c_1d(static_cast<int>(kFftSize), in_.get(),
                                        reinterpret_cast<fftwf_complex*>(out_.get()),
                                        FFTW_ESTIMATE));
    }
    if (!plan_) throw Error("fftw: plan creation failed");
    for (std::size_t n = 0; n < kMelWindow; ++n)
      window_[n] = static_cast<float>(
          0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                               static_cast<double>(kMelWindow - 1)));
  }

  MelFrameAnalyzer(const MelFrameAnalyzer&) = delete;
  MelFrameAnalyzer& operator=(const MelFrameAnalyzer&) = delete;

  const MelFilterbank& filterbank() const { return bank_; }

  // frame: exactly kMelWindow samples. out: kMelBands log energies.
  void analyze(std::span<const float> frame, std::span<float> out) {
    if (frame.size() != kMelWindow || out.size() != kMelBands)
      throw ShapeMismatch("mel frame: wrong size");
    for (std::size_t n = 0; n < kMelWindow; ++n) in_.get()[n] = frame[n] * window_[n];
    for (std::size_t n = kMelWindow; n < kFftSize; ++n) in_.get()[n] = 0.0f;
    fftwf_execute_dft_r2c(plan_.get(), in_.get(), reinterpret_cast<fftwf_complex*>(out_.get()));
    auto* bins = reinterpret_cast<fftwf_complex*>(out_.get());
    for (std::size_t b = 0; b < power_.size(); ++b)
      power_[b] = bins[b][0] * bins[b][0] + bins[b][1] * bins[b][1];
    bank_.apply(power_, out);
    for (float& v : out) v = std::log(std::max(v, kLogFloor));
  }

 private:
  std::unique_ptr<float, detail::FftwFree> in_;
  std::unique_ptr<void, detail::FftwFree> out_;
  std::unique_ptr<fftwf_plan_s, detail::FftwPlanDeleter> plan_;
  std::vector<float> window_;
  std::vector<float> power_;
  MelFilterbank bank_;
};

inline std::size_t mel_frame_count(std::size_t samples) {
  return samples < kMelWindow ? 0 : (samples - kMelWindow) / kMelHop + 1;
}

struct MelFrame {
  std::vector<float> values;  // kMelBands
  double timestamp = 0.0;     // frame start, seconds
};

// Batch mel analysis of a 16 kHz stream; fewer samples than one window
// gives an empty result.
inline std::vector<MelFrame> mel_featurize(std::span<const float> audio) {
  const std::size_t n = mel_frame_count(audio.size());
  std::vector<MelFrame> frames(n);
  if (n == 0) return frames;
  MelFrameAnalyzer analyzer;
  for (std::size_t j = 0; j < n; ++j) {
    frames[j].values.resize(kMelBands);
    frames[j].timestamp = static_cast<double>(j * kMelHop) / kAudioRate;
    analyzer.analyze(audio.subspan(j * kMelHop, kMelWindow), frames[j].values);
  }
  return frames;
}

}  // namespace rts::features
