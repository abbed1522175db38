// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rts/fusion/policy.hpp"

namespace rts::fusion {

// How the FSM reads a cached 6-dim fusion row: softmax probabilities as-is,
// or raw logits mapped through a per-class sigmoid.
enum class FsmInput { kSoftmax, kLogit };

inline const char* fsm_input_name(FsmInput f) { return f == FsmInput::kSoftmax ? "softmax" : "logit"; }

inline FsmInput parse_fsm_input(std::string_view s) {
  if (s == "softmax") return FsmInput::kSoftmax;
  if (s == "logit") return FsmInput::kLogit;
  throw InvalidInput("unknown fsm input type: " + std::string(s));
}

struct FsmParams {
  double theta_raising = 0.5;
  double theta_raised = 0.5;
  double theta_dropping = 0.6;  // aborts RAISING
  double theta_dropped = 0.6;   // aborts LISTENING
  double theta_speech = 0.5;
  int d_raising = 2;
  int d_raised = 3;
  int d_speech = 3;
  int t_wait = 15;   // RAISING -> LISTENING deadline
  int t_onset = 25;  // LISTENING -> trigger deadline
  int s_gesture = 3;
  int s_speech = 3;
  int t_cool = 30;
  double delta = 0.05;
  double theta_abort = 0.8;  // on p(dropping) + p(dropped), any active state

  static constexpr std::size_t kCount = 15;

  void validate() const {
    for (double v : {theta_raising, theta_raised, theta_dropping, theta_dropped, theta_speech, delta, theta_abort})
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("fsm: thresholds must lie in [0,1]");
    for (int v : {d_raising, d_raised, d_speech, t_wait, t_onset, s_gesture, s_speech, t_cool})
      if (v < 1) throw InvalidInput("fsm: durations must be positive tick counts");
  }

  bool operator==(const FsmParams&) const = default;

  // Flat key = value text, one parameter per line.
  std::string to_text() const {
    std::ostringstream o;
    o.precision(17);
    o << "schema_version = 1\n"
      << "theta_raising = " << theta_raising << "\n"
      << "theta_raised = " << theta_raised << "\n"
      << "theta_dropping = " << theta_dropping << "\n"
      << "theta_dropped = " << theta_dropped << "\n"
      << "theta_speech = " << theta_speech << "\n"
      << "d_raising = " << d_raising << "\n"
      << "d_raised = " << d_raised << "\n"
      << "d_speech = " << d_speech << "\n"
      << "t_wait = " << t_wait << "\n"
      << "t_onset = " << t_onset << "\n"
      << "s_gesture = " << s_gesture << "\n"
      << "s_speech = " << s_speech << "\n"
      << "t_cool = " << t_cool << "\n"
      << "delta = " << delta << "\n"
      << "theta_abort = " << theta_abort << "\n";
    return o.str();
  }

  static FsmParams from_text(const std::string& text) {
    FsmParams p;
    std::istringstream in(text);
    std::string line;
    std::size_t seen = 0;
    while (std::getline(in, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        if (line.find_first_not_of(" \t\r") != std::string::npos) throw FormatError("fsm config: bad line: " + line);
        continue;
      }
      auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
      };
      const std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
      double v = 0;
      try {
        std::size_t used = 0;
        v = std::stod(val, &used);
        if (used != val.size()) throw std::invalid_argument(val);
      } catch (const std::exception&) {
        throw FormatError("fsm config: bad value for " + key + ": " + val);
      }
      auto as_int = [&] {
        if (v != std::floor(v)) throw FormatError("fsm config: " + key + " must be an integer");
        return static_cast<int>(v);
      };
      if (key == "schema_version") {
        if (v != 1) throw FormatError("fsm config: unsupported schema version");
        continue;
      }
      ++seen;
      if (key == "theta_raising") p.theta_raising = v;
      else if (key == "theta_raised") p.theta_raised = v;
      else if (key == "theta_dropping") p.theta_dropping = v;
      else if (key == "theta_dropped") p.theta_dropped = v;
      else if (key == "theta_speech") p.theta_speech = v;
      else if (key == "d_raising") p.d_raising = as_int();
      else if (key == "d_raised") p.d_raised = as_int();
      else if (key == "d_speech") p.d_speech = as_int();
      else if (key == "t_wait") p.t_wait = as_int();
      else if (key == "t_onset") p.t_onset = as_int();
      else if (key == "s_gesture") p.s_gesture = as_int();
      else if (key == "s_speech") p.s_speech = as_int();
      else if (key == "t_cool") p.t_cool = as_int();
      else if (key == "delta") p.delta = v;
      else if (key == "theta_abort") p.theta_abort = v;
      else throw FormatError("fsm config: unknown key " + key);
    }
    if (seen != kCount) throw FormatError("fsm config: expected 15 parameters, found " + std::to_string(seen));
    p.validate();
    return p;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    out << to_text();
  }

  static FsmParams load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifact(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str());
  }

  // Uniform draw from the tuning box.
  static FsmParams sample(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> th(0.05, 0.95), ab(0.3, 1.0), dl(0.0, 0.2);
    auto ri = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    FsmParams p;
    p.theta_raising = th(rng);
    p.theta_raised = th(rng);
    p.theta_dropping = th(rng);
    p.theta_dropped = th(rng);
    p.theta_speech = th(rng);
    p.d_raising = ri(1, 5);
    p.d_raised = ri(1, 8);
    p.d_speech = ri(1, 8);
    p.t_wait = ri(3, 30);
    p.t_onset = ri(5, 40);
    p.s_gesture = ri(1, 5);
    p.s_speech = ri(1, 5);
    p.t_cool = ri(10, 50);
    p.delta = dl(rng);
    p.theta_abort = ab(rng);
    return p;
  }

  // Entry thresholds scaled by lambda (clamped to [0,1]); used to move the
  // single operating point along an FRR/FA trade-off.
  FsmParams scaled(double lambda) const {
    FsmParams p = *this;
    auto s = [&](double v) { return std::clamp(v * lambda, 0.0, 1.0); };
    p.theta_raising = s(theta_raising);
    p.theta_raised = s(theta_raised);
    p.theta_speech = s(theta_speech);
    return p;
  }
};

enum class FsmPhase { kIdle, kRaising, kListening, kCooldown };

struct FsmState {
  FsmPhase phase = FsmPhase::kIdle;
  int run = 0;    // consecutive ticks the current advance condition held
  int timer = 0;  // ticks spent in the current phase
  std::size_t tick = 0;
};

// One transition on smoothed probabilities. g = [raising, raised, dropping,
// dropped], s = p(speech). Returns an event on the triggering tick.
inline std::optional<TriggerEvent> fsm_step(const FsmParams& p, const std::array<float, 4>& g, float s,
                                            FsmState& st) {
  std::optional<TriggerEvent> ev;
  // Continuing a run needs the threshold minus the hysteresis margin.
  auto held = [&](double v, double theta) { return v > (st.run > 0 ? theta - p.delta : theta); };
  const double down = double(g[2]) + double(g[3]);
  switch (st.phase) {
    case FsmPhase::kIdle:
      st.run = held(g[0], p.theta_raising) ? st.run + 1 : 0;
      if (st.run >= p.d_raising) st = {FsmPhase::kRaising, 0, 0, st.tick};
      break;
    case FsmPhase::kRaising:
      ++st.timer;
      if (g[2] > p.theta_dropping || down > p.theta_abort) {
        st = {FsmPhase::kIdle, 0, 0, st.tick};
        break;
      }
      st.run = held(g[1], p.theta_raised) ? st.run + 1 : 0;
      if (st.run >= p.d_raised) st = {FsmPhase::kListening, 0, 0, st.tick};
      else if (st.timer >= p.t_wait) st = {FsmPhase::kIdle, 0, 0, st.tick};
      break;
    case FsmPhase::kListening:
      ++st.timer;
      if (g[3] > p.theta_dropped || down > p.theta_abort) {
        st = {FsmPhase::kIdle, 0, 0, st.tick};
        break;
      }
      st.run = held(s, p.theta_speech) ? st.run + 1 : 0;
      if (st.run >= p.d_speech) {
        ev = TriggerEvent{st.tick, s, "fsm"};
        st = {FsmPhase::kCooldown, 0, 0, st.tick};
      } else if (st.timer >= p.t_onset) {
        st = {FsmPhase::kIdle, 0, 0, st.tick};
      }
      break;
    case FsmPhase::kCooldown:
      if (++st.timer >= p.t_cool) st = {FsmPhase::kIdle, 0, 0, st.tick};
      break;
  }
  ++st.tick;
  return ev;
}

inline float sigmoid(float v) { return 1.0f / (1.0f + std::exp(-v)); }

// Converts one fusion row to class probabilities for the FSM.
inline void fsm_probabilities(std::span<const float> row, FsmInput input, std::array<float, 4>& g, float& s) {
  if (input == FsmInput::kSoftmax) {
    for (std::size_t k = 0; k < 4; ++k) g[k] = row[k];
    s = row[5];
  } else {
    for (std::size_t k = 0; k < 4; ++k) g[k] = sigmoid(row[k]);
    s = sigmoid(row[5]);
  }
}

// Causal moving averages over the last s_gesture / s_speech ticks.
class FsmRunner {
 public:
  FsmRunner(const FsmParams& p, FsmInput input) : p_(p), input_(input) { p.validate(); }

  void reset() {
    st_ = {};
    gh_.clear();
    sh_.clear();
  }

  std::optional<TriggerEvent> step(std::span<const float> row) {
    if (row.size() != kFusionDims) throw ShapeMismatch("fsm: fusion row must have 6 values");
    std::array<float, 4> g;
    float s;
    fsm_probabilities(row, input_, g, s);
    gh_.push_back(g);
    sh_.push_back(s);
    if (gh_.size() > static_cast<std::size_t>(p_.s_gesture)) gh_.pop_front();
    if (sh_.size() > static_cast<std::size_t>(p_.s_speech)) sh_.pop_front();
    std::array<double, 4> ga{};
    for (const auto& v : gh_)
      for (std::size_t k = 0; k < 4; ++k) ga[k] += v[k];
    double sa = 0;
    for (float v : sh_) sa += v;
    std::array<float, 4> gs;
    for (std::size_t k = 0; k < 4; ++k) gs[k] = static_cast<float>(ga[k] / static_cast<double>(gh_.size()));
    return fsm_step(p_, gs, static_cast<float>(sa / static_cast<double>(sh_.size())), st_);
  }

  const FsmState& state() const { return st_; }

 private:
  FsmParams p_;
  FsmInput input_;
  FsmState st_;
  std::deque<std::array<float, 4>> gh_;
  std::deque<float> sh_;
};

inline std::vector<TriggerEvent> run_fsm(const FsmParams& p, FsmInput input, const nn::Tensor<float>& fused) {
  nn::require_shape(fused, {fused.rows(), kFusionDims}, "fsm input");
  FsmRunner r(p, input);
  std::vector<TriggerEvent> out;
  for (std::size_t t = 0; t < fused.rows(); ++t)
    if (auto e = r.step(fused.row(t))) out.push_back(*e);
  return out;
}

}  // namespace rts::fusion
