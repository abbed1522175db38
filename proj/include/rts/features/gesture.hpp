// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>

#include "rts/common.hpp"

namespace rts::features {

inline constexpr std::size_t kGestureDims = 31;
inline constexpr std::size_t kGestureWindow = 100;  // 1 s at 100 Hz
inline constexpr std::size_t kStatsPerChannel = 7;

// Feature order: for each channel in {x, y, z, |a|}, the statistics
// mean, std (population), min, max, rms, mean |first difference|, energy;
// then corr(x,y), corr(x,z), corr(y,z).
enum class GestureStat { kMean, kStd, kMin, kMax, kRms, kMeanAbsDiff, kEnergy };

inline constexpr std::size_t gesture_index(std::size_t channel, GestureStat s) {
  return channel * kStatsPerChannel + static_cast<std::size_t>(s);
}
inline constexpr std::size_t kCorrXY = 28, kCorrXZ = 29, kCorrYZ = 30;

using GestureVector = std::array<float, kGestureDims>;

namespace detail {

struct ChannelStats {
  double mean = 0, var = 0, mn = 0, mx = 0, ms = 0, mad = 0;
};

template <typename Get>
ChannelStats channel_stats(std::size_t n, Get get) {
  ChannelStats s;
  double sum = 0, sq = 0, absd = 0;
  s.mn = s.mx = get(0);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = get(i);
    sum += v;
    sq += v * v;
    s.mn = std::min(s.mn, v);
    s.mx = std::max(s.mx, v);
    if (i > 0) absd += std::abs(v - get(i - 1));
  }
  s.mean = sum / static_cast<double>(n);
  double dev = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = get(i) - s.mean;
    dev += d * d;
  }
  s.var = dev / static_cast<double>(n);
  s.ms = sq / static_cast<double>(n);
  s.mad = n > 1 ? absd / static_cast<double>(n - 1) : 0.0;
  return s;
}

}  // namespace detail

// window: kGestureWindow samples of interleaved (x, y, z) in g.
inline GestureVector gesture_featurize(std::span<const float> window) {
  if (window.size() != kGestureWindow * 3)
    throw ShapeMismatch("gesture window must be 100 x 3 samples, got " +
                        std::to_string(window.size()) + " values");
  const std::size_t n = kGestureWindow;
  std::array<double, kGestureWindow> mag;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = window[3 * i], y = window[3 * i + 1], z = window[3 * i + 2];
    mag[i] = std::sqrt(x * x + y * y + z * z);
  }
  GestureVector out{};
  std::array<detail::ChannelStats, 4> st;
  for (std::size_t c = 0; c < 4; ++c) {
    if (c < 3)
      st[c] = detail::channel_stats(n, [&](std::size_t i) { return double(window[3 * i + c]); });
    else
      st[c] = detail::channel_stats(n, [&](std::size_t i) { return mag[i]; });
    const auto& s = st[c];
    out[gesture_index(c, GestureStat::kMean)] = static_cast<float>(s.mean);
    out[gesture_index(c, GestureStat::kStd)] = static_cast<float>(std::sqrt(s.var));
    out[gesture_index(c, GestureStat::kMin)] = static_cast<float>(s.mn);
    out[gesture_index(c, GestureStat::kMax)] = static_cast<float>(s.mx);
    out[gesture_index(c, GestureStat::kRms)] = static_cast<float>(std::sqrt(s.ms));
    out[gesture_index(c, GestureStat::kMeanAbsDiff)] = static_cast<float>(s.mad);
    out[gesture_index(c, GestureStat::kEnergy)] = static_cast<float>(s.ms);
  }
  auto corr = [&](std::size_t a, std::size_t b) {
    double cov = 0;
    for (std::size_t i = 0; i < n; ++i)
      cov += (window[3 * i + a] - st[a].mean) * (window[3 * i + b] - st[b].mean);
    cov /= static_cast<double>(n);
    const double den = std::sqrt(st[a].var * st[b].var);
    if (!(den > 1e-12)) return 0.0f;
    return static_cast<float>(std::clamp(cov / den, -1.0, 1.0));
  };
  out[kCorrXY] = corr(0, 1);
  out[kCorrXZ] = corr(0, 2);
  out[kCorrYZ] = corr(1, 2);
  return out;
}

}  // namespace rts::features
