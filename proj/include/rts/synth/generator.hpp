// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rts/common.hpp"
#include "rts/data/session.hpp"
#include "rts/synth/dsp.hpp"

namespace rts::synth {

using data::Activity;
using data::Challenge;
using data::Environment;
using data::Scenario;
using data::Session;

struct SynthConfig {
  double min_duration = 8.0;
  double max_duration = 20.0;
  double positive_fraction = 0.5;
  double challenge_fraction = 0.5;   // share of negative sessions carrying a challenge tag
  double noise_scale = 1.0;          // environment noise multiplier
  double accel_noise_scale = 1.0;
  double subject_bias = 0.15;        // rad, std of per-subject orientation bias
  double pose_jitter = 0.12;         // rad, std of per-gesture target perturbation
  double speech_level_raised = 0.08; // RMS with the watch at the mouth
  double speech_level_down = 0.03;   // RMS with the arm down
  std::array<double, 8> activity_weights{1, 1, 1, 1, 1, 1, 1, 1};
  std::array<double, 5> environment_weights{1, 1, 1, 1, 1};

  void validate() const {
    if (!(min_duration >= 2.0 && max_duration >= min_duration))
      throw InvalidInput("synth: bad duration range");
    if (positive_fraction < 0 || positive_fraction > 1 || challenge_fraction < 0 ||
        challenge_fraction > 1)
      throw InvalidInput("synth: fractions must lie in [0,1]");
    if (noise_scale < 0 || accel_noise_scale < 0) throw InvalidInput("synth: negative noise scale");
  }
};

struct SubjectProfile {
  std::uint32_t id = 0;
  double raise_speed = 1.0;           // > 0, divides gesture durations
  std::array<double, 3> bias{};       // orientation bias, rad
  double loudness = 1.0;              // > 0
  double noise_affinity = 1.0;        // > 0, scales environment noise
  bool left_wrist = true;
  double f0 = 150.0;                  // voice pitch, Hz

  static SubjectProfile sample(std::uint32_t id, std::uint64_t seed, const SynthConfig& cfg = {}) {
    std::mt19937_64 rng(mix_seed(seed, 0x5b00 + id));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> n(0.0, 1.0);
    SubjectProfile p;
    p.id = id;
    p.raise_speed = std::clamp(std::exp(0.2 * n(rng)), 0.65, 1.5);
    for (auto& b : p.bias) b = cfg.subject_bias * n(rng);
    p.loudness = std::clamp(std::exp(0.2 * n(rng)), 0.6, 1.5);
    p.noise_affinity = std::clamp(std::exp(0.25 * n(rng)), 0.6, 1.6);
    p.left_wrist = u(rng) < 0.85;
    p.f0 = 95.0 + 135.0 * u(rng);
    return p;
  }
};

namespace detail {

struct Phase {
  double start, end;
  std::uint8_t label;
  Vec3 from, to;
  double prox_from, prox_to;
};

enum class VoiceKind { kSpeech, kCough };

struct Voice {
  double start, end;
  VoiceKind kind;
  double gain;   // multiplies the proximity-dependent level
  bool labeled;  // user speech (speech label 1)
};

struct Wobble {
  double start, dur;
  Vec3 axis;
  double angle;
};

struct Script {
  double duration = 0;
  std::vector<Phase> phases;
  std::vector<Voice> voices;
  std::vector<std::size_t> intended;  // voice indices that open an interaction
  std::vector<Wobble> wobbles;
};

struct ActivityMotion {
  double noise, fc, freq, amp;
  double wobble_rate, wobble_angle_lo, wobble_angle_hi, wobble_dur_lo, wobble_dur_hi;
};

inline ActivityMotion activity_motion(Activity a) {
  switch (a) {
    case Activity::kSitting: return {0.015, 3, 0, 0, 0.05, 0.05, 0.15, 0.8, 1.5};
    case Activity::kStanding: return {0.02, 3, 0, 0, 0.05, 0.05, 0.2, 0.8, 1.5};
    case Activity::kWalking: return {0.05, 5, 1.9, 0.18, 0.05, 0.1, 0.25, 0.6, 1.2};
    case Activity::kRunning: return {0.12, 8, 2.7, 0.45, 0.05, 0.1, 0.3, 0.5, 1.0};
    case Activity::kCycling: return {0.06, 6, 1.4, 0.08, 0.15, 0.1, 0.3, 0.8, 2.0};
    case Activity::kDriving: return {0.04, 10, 0, 0, 0.15, 0.1, 0.3, 0.8, 2.0};
    case Activity::kGesturing: return {0.04, 4, 0, 0, 0.4, 0.2, 0.6, 0.4, 1.2};
    case Activity::kLying: return {0.01, 2, 0, 0, 0.03, 0.05, 0.15, 1.0, 2.0};
  }
  return {0.02, 3, 0, 0, 0, 0, 0, 1, 1};
}

inline Vec3 rest_pose(Activity a) {
  switch (a) {
    case Activity::kSitting:
    case Activity::kDriving:
    case Activity::kCycling: return Vec3{-0.55, 0.45, 0.70}.unit();
    case Activity::kLying: return Vec3{0.15, 0.92, -0.36}.unit();
    default: return Vec3{-0.97, 0.08, 0.22}.unit();
  }
}

inline const Vec3 kRaisedPose = Vec3{0.28, -0.32, 0.905}.unit();
inline const Vec3 kEarPose = Vec3{0.12, 0.80, 0.58}.unit();

class Builder {
 public:
  Builder(const SubjectProfile& p, const Scenario& sc, const SynthConfig& cfg, std::mt19937_64& rng)
      : p_(p), sc_(sc), cfg_(cfg), rng_(rng) {
    rest_ = to_device(rest_pose(sc.activity));
    pose_ = rest_;
  }

  double U(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  bool coin(double p) { return U(0, 1) < p; }

  Script build(double target_duration) {
    duration_ = target_duration;
    if (sc_.positive) {
      build_positive();
    } else {
      switch (sc_.challenge) {
        case Challenge::kNone: build_negative(); break;
        case Challenge::kCheckTimeTalking: build_check_time_talking(); break;
        case Challenge::kCheckAndRead: build_check_and_read(); break;
        case Challenge::kRaiseAndCough: build_raise_and_cough(); break;
        case Challenge::kPhoneSameHand: build_phone(); break;
        case Challenge::kSteeringTurnSpeak: build_steering(); break;
      }
    }
    double end = now_;
    for (const auto& v : s_.voices) end = std::max(end, v.end);
    s_.duration = std::max(duration_, end + 0.5);
    hold_until(s_.duration, data::kDropped);
    add_wobbles();
    return std::move(s_);
  }

 private:
  Vec3 to_device(Vec3 v) const {
    v = rotate_xyz(v, p_.bias[0], p_.bias[1], p_.bias[2]);
    if (!p_.left_wrist) v.y = -v.y;
    return v.unit();
  }

  Vec3 jittered(const Vec3& target) {
    std::normal_distribution<double> n(0.0, cfg_.pose_jitter);
    return rotate_xyz(to_device(target), n(rng_), n(rng_), n(rng_)).unit();
  }

  double raise_dur() { return std::max(0.3, U(0.5, 1.0) / p_.raise_speed); }
  double drop_dur() { return std::max(0.3, U(0.4, 0.8) / p_.raise_speed); }

  void hold_until(double t, std::uint8_t label) {
    if (t <= now_) return;
    s_.phases.push_back({now_, t, label, pose_, pose_, prox_, prox_});
    now_ = t;
  }

  void move(double dur, std::uint8_t label, Vec3 to, double prox_to) {
    s_.phases.push_back({now_, now_ + dur, label, pose_, to, prox_, prox_to});
    now_ += dur;
    pose_ = to;
    prox_ = prox_to;
  }

  // dropped until t0, raising, raised for hold seconds, dropping. Returns the
  // time the raised pose is reached.
  double raise_hold_drop(double t0, const Vec3& target, double hold) {
    hold_until(t0, data::kDropped);
    move(raise_dur(), data::kRaising, target, 1.0);
    const double raised_at = now_;
    hold_until(now_ + hold, data::kRaised);
    move(drop_dur(), data::kDropping, rest_, 0.0);
    return raised_at;
  }

  void voice(double a, double b, VoiceKind kind = VoiceKind::kSpeech, double gain = 1.0,
             bool labeled = true) {
    s_.voices.push_back({a, b, kind, gain, labeled});
  }

  // Speech in [t, ...) with the arm down; returns the end time.
  double talk_down(double t, double lo = 0.8, double hi = 2.5) {
    const double e = t + U(lo, hi);
    voice(t, e);
    return e;
  }

  // Raise, short delay, intended utterance, hold, drop.
  void interaction(double t0) {
    const double delay = U(0.1, 0.7), speech = U(0.8, 2.5), after = U(0.3, 1.0);
    const double raised_at = raise_hold_drop(t0, jittered(kRaisedPose), delay + speech + after);
    s_.intended.push_back(s_.voices.size());
    voice(raised_at + delay, raised_at + delay + speech);
  }

  void silent_check(double t0) { raise_hold_drop(t0, jittered(kRaisedPose), U(0.8, 2.5)); }

  void build_positive() {
    double t = U(0.8, 2.0);
    if (coin(0.25)) t = talk_down(t, 0.8, 2.0) + U(1.5, 2.5);
    interaction(t);
    t = now_ + U(1.0, 2.5);
    // A second interaction needs at most ~7 s.
    if (duration_ - t >= 7.5 && coin(0.5)) {
      interaction(t);
      t = now_ + U(1.0, 2.5);
    }
    if (duration_ - t >= 4.5 && coin(0.35)) {
      silent_check(t);
      t = now_ + U(1.0, 2.0);
    }
    if (duration_ - t >= 3.0 && coin(0.35)) talk_down(t, 0.8, std::min(2.5, duration_ - t - 0.5));
  }

  void build_negative() {
    if (!coin(0.6)) return;
    double t = U(0.3, 2.0);
    const int n = 1 + static_cast<int>(U(0, 3));
    for (int i = 0; i < n && t + 1.3 < duration_; ++i)
      t = talk_down(t, 0.8, std::min(3.0, duration_ - t - 0.5)) + U(0.5, 3.0);
  }

  void build_check_time_talking() {
    const double c = U(0.8, 2.0), lead = U(0.5, 1.8);
    const double hold = U(1.0, 2.5);
    const double raised_at = raise_hold_drop(c + lead, jittered(kRaisedPose), hold);
    voice(c, raised_at + U(0.6, hold + 1.5));
  }

  void build_check_and_read() {
    const double delay = U(1.5, 3.0), read = U(1.0, 2.5), after = U(0.3, 0.8);
    const double raised_at = raise_hold_drop(U(0.8, 2.5), jittered(kRaisedPose), delay + read + after);
    voice(raised_at + delay, raised_at + delay + read);
  }

  void build_raise_and_cough() {
    const double delay = U(0.1, 0.7);
    const int n = 1 + static_cast<int>(U(0, 3));
    std::vector<std::pair<double, double>> bursts;
    double t = delay;
    for (int i = 0; i < n; ++i) {
      const double d = U(0.15, 0.35);
      bursts.emplace_back(t, t + d);
      t += d + U(0.15, 0.45);
    }
    const double raised_at = raise_hold_drop(U(0.8, 2.5), jittered(kRaisedPose), t + U(0.3, 1.0));
    for (auto [a, b] : bursts) voice(raised_at + a, raised_at + b, VoiceKind::kCough, 1.5, false);
  }

  void build_phone() {
    const double hold = U(3.0, 6.0);
    const double raised_at = raise_hold_drop(U(0.8, 2.5), jittered(kEarPose), hold);
    double t = raised_at + U(0.3, 1.2);
    while (t + 0.8 < raised_at + hold - 0.3) {
      const double e = std::min(t + U(0.8, 2.0), raised_at + hold - 0.3);
      voice(t, e);
      t = e + U(0.5, 1.5);
    }
  }

  void build_steering() {
    double t = U(0.8, 2.5);
    const int turns = duration_ > 12 && coin(0.5) ? 2 : 1;
    for (int k = 0; k < turns; ++k) {
      hold_until(t, data::kDropped);
      const double f = U(0.35, 0.6);
      const Vec3 partial = rotate(slerp(rest_, to_device(kRaisedPose), f), {1, 0, 0}, U(-0.3, 0.3)).unit();
      const double start = now_;
      move(U(0.8, 1.5), data::kDropped, partial, 0.5 * f);
      hold_until(now_ + U(0.5, 2.0), data::kDropped);
      move(U(0.8, 1.5), data::kDropped, rest_, 0.0);
      const double vs = std::max(0.1, start + U(-0.5, 0.8));
      voice(vs, vs + U(1.0, 3.0), VoiceKind::kSpeech, 2.0);
      t = std::max(now_, s_.voices.back().end) + U(1.0, 2.5);
    }
  }

  void add_wobbles() {
    const auto m = activity_motion(sc_.activity);
    if (m.wobble_rate <= 0) return;
    std::exponential_distribution<double> gap(m.wobble_rate);
    for (double t = gap(rng_); t < s_.duration; t += gap(rng_)) {
      const double dur = U(m.wobble_dur_lo, m.wobble_dur_hi);
      const double angle = U(m.wobble_angle_lo, m.wobble_angle_hi) * (coin(0.5) ? 1 : -1);
      const Vec3 axis = Vec3{U(-1, 1), U(-1, 1), U(-1, 1)}.unit();
      // Only inside a single resting phase, so labels stay "dropped".
      for (const auto& ph : s_.phases) {
        if (ph.start <= t && t + dur <= ph.end && ph.label == data::kDropped &&
            ph.from.dot(ph.to) > 1 - 1e-12 && ph.prox_from == 0.0) {
          s_.wobbles.push_back({t, dur, axis, angle});
          break;
        }
      }
      t += dur;
    }
  }

  const SubjectProfile& p_;
  const Scenario& sc_;
  const SynthConfig& cfg_;
  std::mt19937_64& rng_;
  Script s_;
  double duration_ = 0;
  double now_ = 0;
  Vec3 rest_, pose_;
  double prox_ = 0;
};

// Formant-filtered pulse train with syllabic amplitude modulation, added
// into out[a, b). level(i) gives the target RMS at sample i.
template <typename Level>
void render_speech(std::vector<float>& out, std::size_t a, std::size_t b, double f0,
                   std::mt19937_64& rng, Level level) {
  static constexpr double kVowels[6][3] = {{730, 1090, 2440}, {530, 1840, 2480}, {270, 2290, 3010},
                                           {570, 840, 2410},  {300, 870, 2240},  {660, 1720, 2410}};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  const double fs = kAudioRate;
  std::vector<double> buf;
  std::size_t pos = a;
  while (pos < b) {
    const std::size_t len = std::min<std::size_t>(b - pos, static_cast<std::size_t>((0.12 + 0.16 * u(rng)) * fs));
    buf.assign(len, 0.0);
    double rel = 1.0;
    if (u(rng) < 0.15) {
      OnePole lp = OnePole::lowpass(3500, fs);
      for (auto& v : buf) {
        const double x = n(rng);
        v = x - lp(x);
      }
      rel = 0.5;
    } else {
      const auto& vw = kVowels[static_cast<std::size_t>(u(rng) * 6) % 6];
      Resonator r1(vw[0] * (0.92 + 0.16 * u(rng)), 90, fs);
      Resonator r2(vw[1] * (0.92 + 0.16 * u(rng)), 110, fs);
      Resonator r3(vw[2] * (0.92 + 0.16 * u(rng)), 170, fs);
      const double pitch = f0 * (0.85 + 0.35 * u(rng));
      const double decl = 0.1 * u(rng);
      double phase = u(rng);
      for (std::size_t i = 0; i < len; ++i) {
        const double f = pitch * (1.0 - decl * static_cast<double>(i) / static_cast<double>(len));
        phase += f / fs;
        double src = 0.03 * n(rng);
        if (phase >= 1.0) {
          phase -= 1.0;
          src += 1.0;
        }
        buf[i] = r1(src) + 0.6 * r2(src) + 0.3 * r3(src);
      }
    }
    double ss = 0;
    for (double v : buf) ss += v * v;
    const double rms = std::sqrt(ss / std::max<std::size_t>(1, len));
    if (rms > 0) {
      for (std::size_t i = 0; i < len; ++i) {
        const double env = std::pow(std::sin(std::numbers::pi * (i + 0.5) / len), 0.6);
        out[pos + i] += static_cast<float>(buf[i] / rms * env * rel * level(pos + i) * 1.25);
      }
    }
    pos += len + static_cast<std::size_t>(0.05 * u(rng) * fs);
  }
}

template <typename Level>
void render_cough(std::vector<float>& out, std::size_t a, std::size_t b, std::mt19937_64& rng,
                  Level level) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double fs = kAudioRate;
  OnePole lp = OnePole::lowpass(2500, fs);
  Resonator res(450, 300, fs);
  const double tau = 0.05 + 0.05 * u(rng);
  const std::size_t len = b - a;
  std::vector<double> buf(len);
  double ss = 0;
  for (std::size_t i = 0; i < len; ++i) {
    const double x = n(rng);
    const double t = static_cast<double>(i) / fs;
    const double env = t < 0.012 ? t / 0.012 : std::exp(-(t - 0.012) / tau);
    buf[i] = (0.5 * lp(x) + 2.0 * res(x)) * env;
    ss += buf[i] * buf[i];
  }
  const double rms = std::sqrt(ss / std::max<std::size_t>(1, len));
  if (rms <= 0) return;
  for (std::size_t i = 0; i < len; ++i) out[a + i] += static_cast<float>(buf[i] / rms * level(a + i) * 1.5);
}

inline void render_environment(std::vector<float>& out, Environment env, double scale,
                               std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double fs = kAudioRate;
  const std::size_t N = out.size();
  const double dur = static_cast<double>(N) / fs;
  auto colored = [&](double fc, double sigma) {
    OnePole lp = OnePole::lowpass(fc, fs);
    const double g = sigma / lp.white_gain();
    for (auto& v : out) v += static_cast<float>(lp(g * n(rng)));
  };
  auto babble = [&](int voices, double level) {
    for (int k = 0; k < voices; ++k) {
      const double f0 = 90 + 150 * u(rng);
      double t = 2.0 * u(rng);
      while (t < dur) {
        const double e = std::min(dur, t + 1.0 + 3.0 * u(rng));
        render_speech(out, static_cast<std::size_t>(t * fs), static_cast<std::size_t>(e * fs), f0, rng,
                      [&](std::size_t) { return level; });
        t = e + 0.3 + 1.7 * u(rng);
      }
    }
  };
  switch (env) {
    case Environment::kQuiet:
      for (auto& v : out) v += static_cast<float>(0.0015 * scale * n(rng));
      break;
    case Environment::kMeeting:
      colored(1000, 0.003 * scale);
      babble(2, 0.006 * scale);
      break;
    case Environment::kGym: {
      colored(400, 0.008 * scale);
      for (double t = u(rng); t < dur; t += 0.6 + 0.9 * u(rng)) {
        const std::size_t a = static_cast<std::size_t>(t * fs);
        const double f = 60 + 40 * u(rng);
        for (std::size_t i = 0; i < static_cast<std::size_t>(0.15 * fs) && a + i < N; ++i) {
          const double tt = static_cast<double>(i) / fs;
          out[a + i] += static_cast<float>(0.04 * scale * std::exp(-tt / 0.04) *
                                           std::sin(2 * std::numbers::pi * f * tt));
        }
      }
      double ph[3] = {0, 0, 0};
      double fr[3] = {0, 0, 0};
      for (std::size_t i = 0; i < N; ++i) {
        if (i % (static_cast<std::size_t>(fs) / 2) == 0)
          for (double& f : fr) f = 200 + 600 * u(rng);
        double s = 0;
        for (int k = 0; k < 3; ++k) {
          ph[k] += fr[k] / fs;
          s += std::sin(2 * std::numbers::pi * ph[k]);
        }
        out[i] += static_cast<float>(0.002 * scale * s);
      }
      break;
    }
    case Environment::kPark: {
      OnePole lp = OnePole::lowpass(150, fs);
      const double g = 0.01 * scale / lp.white_gain();
      const double mph = 2 * std::numbers::pi * u(rng);
      for (std::size_t i = 0; i < N; ++i) {
        const double m = 0.6 + 0.4 * std::sin(2 * std::numbers::pi * 0.2 * i / fs + mph);
        out[i] += static_cast<float>(m * lp(g * n(rng)));
      }
      std::exponential_distribution<double> gap(0.4);
      for (double t = gap(rng); t < dur; t += gap(rng)) {
        const std::size_t a = static_cast<std::size_t>(t * fs);
        const double len = 0.08 + 0.07 * u(rng), f_a = 2500 + 2500 * u(rng), f_b = 2500 + 2500 * u(rng);
        double ph = 0;
        for (std::size_t i = 0; i < static_cast<std::size_t>(len * fs) && a + i < N; ++i) {
          const double x = static_cast<double>(i) / (len * fs);
          ph += (f_a + (f_b - f_a) * x) / fs;
          out[a + i] += static_cast<float>(0.01 * scale * std::sin(std::numbers::pi * x) *
                                           std::sin(2 * std::numbers::pi * ph));
        }
      }
      break;
    }
    case Environment::kCrowd:
      colored(2000, 0.006 * scale);
      babble(4, 0.007 * scale);
      break;
  }
}

inline const Phase& phase_at(const Script& s, double t) {
  for (const auto& ph : s.phases)
    if (t < ph.end) return ph;
  return s.phases.back();
}

}  // namespace detail

// Synthesizes one labeled session from a generative script. Pure function
// of (profile, scenario, seed, cfg).
inline Session generate_session(const SubjectProfile& profile, const Scenario& scenario,
                                std::uint64_t seed, const SynthConfig& cfg = {},
                                std::string id = {}) {
  using namespace detail;
  scenario.validate();
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> nrm(0.0, 1.0);

  Builder b(profile, scenario, cfg, rng);
  Script script = b.build(cfg.min_duration + (cfg.max_duration - cfg.min_duration) * u(rng));
  const std::size_t ticks = static_cast<std::size_t>(std::ceil(script.duration / kTickSeconds - 1e-9));

  Session s;
  s.id = id.empty() ? "session-" + hex64(seed) : std::move(id);
  s.subject = profile.id;
  s.scenario = scenario;

  // Labels at tick midpoints.
  s.labels.speech.assign(ticks, 0);
  s.labels.gesture.assign(ticks, data::kDropped);
  s.labels.intent.assign(ticks, 0);
  for (std::size_t t = 0; t < ticks; ++t) {
    const double m = (static_cast<double>(t) + 0.5) * kTickSeconds;
    s.labels.gesture[t] = phase_at(script, m).label;
    for (const auto& v : script.voices)
      if (v.labeled && v.kind == VoiceKind::kSpeech && v.start <= m && m < v.end) s.labels.speech[t] = 1;
  }
  for (std::size_t vi : script.intended) {
    const auto& v = script.voices[vi];
    std::size_t t = 0;
    while (t < ticks && (static_cast<double>(t) + 0.5) * kTickSeconds < v.start) ++t;
    if (t >= ticks || s.labels.gesture[t] != data::kRaised || !s.labels.speech[t])
      throw Error("synth: intended utterance does not start in the raised phase");
    s.onsets.push_back(static_cast<double>(t) * kTickSeconds);
    for (; t < ticks && (static_cast<double>(t) + 0.5) * kTickSeconds < v.end; ++t) s.labels.intent[t] = 1;
  }

  // Accelerometer: gravity along the scripted pose, plus motion terms.
  const auto am = activity_motion(scenario.activity);
  const std::size_t n_acc = ticks * kAccelSamplesPerTick;
  s.accel.resize(3 * n_acc);
  {
    const double anoise = am.noise * cfg.accel_noise_scale;
    OnePole f[3] = {OnePole::lowpass(am.fc, kAccelRate), OnePole::lowpass(am.fc, kAccelRate),
                    OnePole::lowpass(am.fc, kAccelRate)};
    const double g = anoise / f[0].white_gain();
    const double freq = am.freq * (0.9 + 0.2 * u(rng));
    const double ph0 = 2 * std::numbers::pi * u(rng);
    std::size_t pi = 0;
    for (std::size_t i = 0; i < n_acc; ++i) {
      const double t = static_cast<double>(i) / kAccelRate;
      while (pi + 1 < script.phases.size() && t >= script.phases[pi].end) ++pi;
      const auto& ph = script.phases[pi];
      const double span = ph.end - ph.start;
      const double x = span > 0 ? (t - ph.start) / span : 1.0;
      Vec3 gv = slerp(ph.from, ph.to, min_jerk(x));
      Vec3 lin{};
      if (ph.from.dot(ph.to) < 1 - 1e-12) lin = (ph.to - ph.from).unit() * (0.04 * min_jerk_acc(x) / (span * span));
      for (const auto& w : script.wobbles)
        if (t >= w.start && t < w.start + w.dur) {
          const double sx = std::sin(std::numbers::pi * (t - w.start) / w.dur);
          gv = rotate(gv, w.axis, w.angle * sx * sx);
        }
      Vec3 a = gv + lin;
      if (am.amp > 0) {
        const double arg = 2 * std::numbers::pi * freq * t + ph0;
        a = a + gv * (am.amp * (std::sin(arg) + 0.3 * std::sin(2 * arg + 0.7)));
      }
      const double e[3] = {f[0](g * nrm(rng)), f[1](g * nrm(rng)), f[2](g * nrm(rng))};
      s.accel[3 * i + 0] = static_cast<float>(a.x + e[0] + 0.005 * nrm(rng));
      s.accel[3 * i + 1] = static_cast<float>(a.y + e[1] + 0.005 * nrm(rng));
      s.accel[3 * i + 2] = static_cast<float>(a.z + e[2] + 0.005 * nrm(rng));
    }
  }

  // Audio: environment bed, then voices whose level follows mouth proximity.
  const std::size_t n_aud = ticks * kAudioSamplesPerTick;
  s.audio.assign(n_aud, 0.0f);
  render_environment(s.audio, scenario.environment, profile.noise_affinity * cfg.noise_scale, rng);
  const bool loud_env = scenario.environment == Environment::kCrowd || scenario.environment == Environment::kGym;
  const double lombard = loud_env ? 1.2 : 1.0;
  for (const auto& v : script.voices) {
    const std::size_t a = std::min(n_aud, static_cast<std::size_t>(v.start * kAudioRate));
    const std::size_t e = std::min(n_aud, static_cast<std::size_t>(v.end * kAudioRate));
    if (e <= a) continue;
    auto level = [&](std::size_t i) {
      const double t = static_cast<double>(i) / kAudioRate;
      const auto& ph = phase_at(script, t);
      const double span = ph.end - ph.start;
      const double x = span > 0 ? min_jerk((t - ph.start) / span) : 1.0;
      const double prox = ph.prox_from + (ph.prox_to - ph.prox_from) * x;
      return profile.loudness * lombard * v.gain *
             (cfg.speech_level_down + (cfg.speech_level_raised - cfg.speech_level_down) * prox);
    };
    if (v.kind == VoiceKind::kSpeech)
      render_speech(s.audio, a, e, profile.f0, rng, level);
    else
      render_cough(s.audio, a, e, rng, level);
  }
  for (auto& x : s.audio) x = std::clamp(x, -1.0f, 1.0f);
  return s;
}

}  // namespace rts::synth
