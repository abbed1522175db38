// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "rts/data/session.hpp"
#include "rts/detectors/detector.hpp"
#include "rts/features/timeline.hpp"
#include "rts/fusion/fsm.hpp"
#include "rts/fusion/policy.hpp"

namespace rts::eval {

struct HostInfo {
  std::string cpu;
  std::size_t cores = 0;
};

inline HostInfo host_info() {
  HostInfo h;
  h.cores = std::max(1u, std::thread::hardware_concurrency());
  std::ifstream in("/proc/cpuinfo");
  for (std::string line; std::getline(in, line);)
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) h.cpu = line.substr(line.find_first_not_of(" \t", colon + 1));
      break;
    }
  if (h.cpu.empty()) h.cpu = "unknown";
  return h;
}

// Peak resident set size in KiB (VmHWM), or 0 where unavailable.
inline std::size_t peak_rss_kib() {
  std::ifstream in("/proc/self/status");
  for (std::string line; std::getline(in, line);)
    if (line.rfind("VmHWM:", 0) == 0) return std::stoul(line.substr(6));
  return 0;
}

// Full streaming chain for one variant: raw sensor chunks in, trigger
// decisions out, one decision tick at a time.
class Pipeline {
 public:
  Pipeline(const detectors::Detector& speech, const detectors::Detector& gesture, const fusion::NeuralPolicy& policy)
      : speech_(speech), gesture_(gesture), policy_(policy), type_(policy.config().fusion) {}

  Pipeline(const detectors::Detector& speech, const detectors::Detector& gesture, const fusion::FsmParams& fsm,
           fusion::FsmInput input)
      : speech_(speech), gesture_(gesture), fsm_(std::in_place, fsm, input), fsm_input_(input) {}

  void reset() {
    feat_.emplace();
    speech_.reset();
    gesture_.reset();
    if (policy_) policy_->reset();
    if (fsm_) fsm_->reset();
    prev_ = false;
    tick_ = next_allowed_ = 0;
  }

  // Feeds one tick of raw input (1600 audio samples, 10 accel triples) and
  // processes every decision tick that became available.
  std::size_t push(std::span<const float> audio, std::span<const float> accel) {
    feat_->push_audio(audio);
    feat_->push_accel(accel);
    std::size_t triggers = 0;
    for (const auto& f : feat_->poll()) triggers += decide(f);
    return triggers;
  }

  std::size_t finish() {
    std::size_t triggers = 0;
    for (const auto& f : feat_->finish()) triggers += decide(f);
    return triggers;
  }

 private:
  std::size_t decide(const features::TickFrame& f) {
    const auto s = speech_.step(f.audio, f.timestamp);
    std::copy(s.begin(), s.end(), sbuf_.begin());
    const auto g = gesture_.step(f.gesture, f.timestamp);
    std::copy(g.begin(), g.end(), gbuf_.begin());
    const bool softmax = fsm_ ? fsm_input_ == fusion::FsmInput::kSoftmax : type_ == fusion::FusionType::kSoftmax;
    auto row = std::span<float>(row_);
    if (softmax) {
      nn::softmax(std::span<const float>(gbuf_), row.subspan(0, 4));
      nn::softmax(std::span<const float>(sbuf_), row.subspan(4, 2));
    } else {
      std::copy(gbuf_.begin(), gbuf_.end(), row.begin());
      std::copy(sbuf_.begin(), sbuf_.end(), row.begin() + 4);
    }
    if (fsm_) return fsm_->step(row_).has_value() ? 1 : 0;
    const float p = policy_->step(row_);
    // Rising-edge trigger with cooldown, as in decide_triggers.
    const bool above = p >= 0.5f;
    std::size_t fired = 0;
    if (above && !prev_ && tick_ >= next_allowed_) {
      fired = 1;
      next_allowed_ = tick_ + fusion::kTriggerCooldown;
    }
    prev_ = above;
    ++tick_;
    return fired;
  }

  std::optional<features::StreamingFeaturizer> feat_{std::in_place};
  detectors::DetectorStream speech_, gesture_;
  std::optional<fusion::PolicyStream> policy_;
  fusion::FusionType type_ = fusion::FusionType::kLogit;
  std::optional<fusion::FsmRunner> fsm_;
  fusion::FsmInput fsm_input_ = fusion::FsmInput::kSoftmax;
  std::array<float, 2> sbuf_{};
  std::array<float, 4> gbuf_{};
  std::array<float, fusion::kFusionDims> row_{};
  bool prev_ = false;
  std::size_t tick_ = 0, next_allowed_ = 0;
};

struct BenchStats {
  std::string label;
  std::size_t warmup = 0;
  std::vector<double> per_tick_ms;  // one entry per timed iteration
  std::size_t ticks_per_iteration = 0;
  double mean_ms = 0, p95_ms = 0, stdev_ms = 0;
  std::size_t peak_rss_kib = 0;
  HostInfo host;

  nlohmann::json to_json() const {
    return {{"label", label},
            {"warmup", warmup},
            {"iterations", per_tick_ms.size()},
            {"ticks_per_iteration", ticks_per_iteration},
            {"mean_ms_per_tick", mean_ms},
            {"p95_ms_per_tick", p95_ms},
            {"stdev_ms_per_tick", stdev_ms},
            {"samples_ms_per_tick", per_tick_ms},
            {"peak_rss_kib", peak_rss_kib},
            {"host", {{"cpu", host.cpu}, {"cores", host.cores}}}};
  }
};

inline void summarize(BenchStats& b) {
  auto v = b.per_tick_ms;
  if (v.empty()) return;
  b.mean_ms = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - b.mean_ms) * (x - b.mean_ms);
  b.stdev_ms = std::sqrt(ss / static_cast<double>(v.size()));
  std::sort(v.begin(), v.end());
  // Nearest-rank percentile.
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(v.size())));
  b.p95_ms = v[std::max<std::size_t>(rank, 1) - 1];
}

// One iteration streams the whole session through the pipeline in tick-sized
// chunks; the recorded sample is wall time divided by decision ticks.
inline BenchStats benchmark(Pipeline& pipe, const data::Session& input, std::size_t iterations,
                            std::size_t warmup, const std::string& label) {
  if (iterations == 0) throw InvalidInput("bench: iterations must be positive");
  const std::size_t saved_cap = thread_cap();
  thread_cap() = 1;
  BenchStats b;
  b.label = label;
  b.warmup = warmup;
  b.host = host_info();
  const std::size_t ticks = features::audio_tick_count(input.audio.size());
  if (ticks == 0) throw InvalidInput("bench: session shorter than one tick");
  b.ticks_per_iteration = ticks;
  std::size_t sink = 0;
  for (std::size_t it = 0; it < warmup + iterations; ++it) {
    pipe.reset();
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t t = 0; t < ticks; ++t) {
      const auto a = std::span<const float>(input.audio).subspan(t * kAudioSamplesPerTick, kAudioSamplesPerTick);
      const std::size_t lo = std::min(input.accel.size(), t * kAccelSamplesPerTick * 3);
      const std::size_t hi = std::min(input.accel.size(), lo + kAccelSamplesPerTick * 3);
      sink += pipe.push(a, std::span<const float>(input.accel).subspan(lo, hi - lo));
    }
    sink += pipe.finish();
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (it >= warmup) b.per_tick_ms.push_back(ms / static_cast<double>(ticks));
  }
  thread_cap() = saved_cap;
  // Keeps the decision path observable to the optimizer.
  if (sink == static_cast<std::size_t>(-1)) b.label += "*";
  summarize(b);
  b.peak_rss_kib = peak_rss_kib();
  return b;
}

}  // namespace rts::eval
