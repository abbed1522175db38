// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rts/common.hpp"
#include "rts/nn/checkpoint.hpp"  // ByteWriter / ByteReader, file IO

namespace rts::data {

enum class Activity : std::uint8_t {
  kSitting, kStanding, kWalking, kRunning, kCycling, kDriving, kGesturing, kLying
};
enum class Environment : std::uint8_t { kQuiet, kMeeting, kGym, kPark, kCrowd };
enum class Challenge : std::uint8_t {
  kNone, kCheckTimeTalking, kCheckAndRead, kRaiseAndCough, kPhoneSameHand, kSteeringTurnSpeak
};

inline constexpr std::array<std::string_view, 8> kActivityNames = {
    "sitting", "standing", "walking", "running", "cycling", "driving", "gesturing", "lying"};
inline constexpr std::array<std::string_view, 5> kEnvironmentNames = {
    "quiet", "meeting", "gym", "park", "crowd"};
inline constexpr std::array<std::string_view, 6> kChallengeNames = {
    "none", "check-time-talking", "check-and-read", "raise-and-cough", "phone-same-hand",
    "steering-turn-speak"};
inline constexpr std::array<Challenge, 5> kChallenges = {
    Challenge::kCheckTimeTalking, Challenge::kCheckAndRead, Challenge::kRaiseAndCough,
    Challenge::kPhoneSameHand, Challenge::kSteeringTurnSpeak};

inline std::string_view name(Activity a) { return kActivityNames[static_cast<std::size_t>(a)]; }
inline std::string_view name(Environment e) { return kEnvironmentNames[static_cast<std::size_t>(e)]; }
inline std::string_view name(Challenge c) { return kChallengeNames[static_cast<std::size_t>(c)]; }

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::string_view, N>& names, const char* what) {
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == s) return static_cast<E>(i);
  throw InvalidInput(std::string("unknown ") + what + ": " + std::string(s));
}

struct Scenario {
  Activity activity = Activity::kSitting;
  Environment environment = Environment::kQuiet;
  bool positive = false;
  Challenge challenge = Challenge::kNone;

  void validate() const {
    if (positive && challenge != Challenge::kNone)
      throw InvalidInput("challenge tags apply to negative scenarios only");
  }

  // "<activity>/<environment>/<pos|neg>[/<challenge>]"
  std::string tag() const {
    std::string s = std::string(name(activity)) + "/" + std::string(name(environment)) + "/" +
                    (positive ? "pos" : "neg");
    if (challenge != Challenge::kNone) s += "/" + std::string(name(challenge));
    return s;
  }

  static Scenario parse(std::string_view tag) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
      const auto p = tag.find('/', start);
      parts.push_back(tag.substr(start, p == std::string_view::npos ? p : p - start));
      if (p == std::string_view::npos) break;
      start = p + 1;
    }
    if (parts.size() < 3 || parts.size() > 4) throw InvalidInput("bad scenario tag: " + std::string(tag));
    Scenario sc;
    sc.activity = parse_enum<Activity>(parts[0], kActivityNames, "activity");
    sc.environment = parse_enum<Environment>(parts[1], kEnvironmentNames, "environment");
    if (parts[2] != "pos" && parts[2] != "neg") throw InvalidInput("bad scenario intent: " + std::string(tag));
    sc.positive = parts[2] == "pos";
    if (parts.size() == 4) sc.challenge = parse_enum<Challenge>(parts[3], kChallengeNames, "challenge");
    sc.validate();
    return sc;
  }

  bool operator==(const Scenario&) const = default;
};

enum GestureClass : std::uint8_t { kRaising = 0, kRaised = 1, kDropping = 2, kDropped = 3 };
inline constexpr std::size_t kGestureClasses = 4;
inline constexpr std::size_t kSpeechClasses = 2;

struct TickLabels {
  std::vector<std::uint8_t> speech;   // {0,1}
  std::vector<std::uint8_t> gesture;  // GestureClass
  std::vector<std::uint8_t> intent;   // {0,1}

  std::size_t size() const { return gesture.size(); }
  bool operator==(const TickLabels&) const = default;
};

struct Session {
  std::string id;
  std::uint32_t subject = 0;
  Scenario scenario;
  std::vector<float> audio;   // 16 kHz mono PCM in [-1, 1]
  std::vector<float> accel;   // 100 Hz interleaved (x, y, z), in g
  TickLabels labels;
  std::vector<double> onsets;  // trigger onsets, seconds

  std::size_t accel_samples() const { return accel.size() / 3; }
  double audio_seconds() const { return static_cast<double>(audio.size()) / kAudioRate; }
  double accel_seconds() const { return static_cast<double>(accel_samples()) / kAccelRate; }
  double duration() const { return std::max(audio_seconds(), accel_seconds()); }

  bool operator==(const Session&) const = default;
};

inline constexpr std::uint16_t kSessionVersion = 1;

inline std::string encode_session(const Session& s) {
  using nn::detail::ByteWriter;
  if (s.labels.speech.size() != s.labels.size() || s.labels.intent.size() != s.labels.size())
    throw ShapeMismatch("session labels: timeline lengths differ");
  if (s.accel.size() % 3 != 0) throw ShapeMismatch("accel stream must have 3 channels");
  ByteWriter w;
  w.bytes("RTSS");
  w.u16(kSessionVersion);
  w.str16(s.id);
  w.u32(s.subject);
  w.str16(s.scenario.tag());
  w.f64(s.audio_seconds());
  w.f64(s.accel_seconds());
  w.u32(kAudioRate);
  w.u32(kAccelRate);
  w.u32(4);
  auto chunk = [&](std::string_view tag, const std::string& body) {
    w.bytes(tag);
    w.u32(static_cast<std::uint32_t>(body.size()));
    w.bytes(body);
  };
  {
    ByteWriter c;
    for (float v : s.audio) c.f32(v);
    chunk("AUDI", c.take());
  }
  {
    ByteWriter c;
    for (float v : s.accel) c.f32(v);
    chunk("ACCL", c.take());
  }
  {
    ByteWriter c;
    c.u32(static_cast<std::uint32_t>(s.labels.size()));
    for (std::size_t t = 0; t < s.labels.size(); ++t) {
      c.u8(s.labels.speech[t]);
      c.u8(s.labels.gesture[t]);
      c.u8(s.labels.intent[t]);
    }
    chunk("LABL", c.take());
  }
  {
    ByteWriter c;
    for (double v : s.onsets) c.f64(v);
    chunk("EVNT", c.take());
  }
  return w.take();
}

inline Session decode_session(std::string_view bytes) {
  using nn::detail::ByteReader;
  ByteReader r(bytes);
  if (r.bytes(4) != "RTSS") throw FormatError("session: bad magic");
  if (const auto v = r.u16(); v != kSessionVersion)
    throw FormatError("session: unsupported version " + std::to_string(v));
  Session s;
  s.id = r.str16();
  s.subject = r.u32();
  s.scenario = Scenario::parse(r.str16());
  r.f64();
  r.f64();
  if (r.u32() != kAudioRate || r.u32() != kAccelRate) throw FormatError("session: unsupported sample rates");
  const auto n_chunks = r.u32();
  for (std::uint32_t i = 0; i < n_chunks; ++i) {
    const std::string tag = r.bytes(4);
    const std::string body = r.bytes(r.u32());
    ByteReader c(body);
    if (tag == "AUDI" || tag == "ACCL") {
      if (body.size() % 4) throw FormatError("session: truncated " + tag);
      auto& dst = tag == "AUDI" ? s.audio : s.accel;
      dst.resize(body.size() / 4);
      for (auto& v : dst) v = c.f32();
    } else if (tag == "LABL") {
      const auto n = c.u32();
      if (c.remaining() != 3ull * n) throw FormatError("session: label chunk size");
      s.labels.speech.resize(n);
      s.labels.gesture.resize(n);
      s.labels.intent.resize(n);
      for (std::uint32_t t = 0; t < n; ++t) {
        s.labels.speech[t] = c.u8();
        s.labels.gesture[t] = c.u8();
        s.labels.intent[t] = c.u8();
        if (s.labels.speech[t] > 1 || s.labels.gesture[t] > 3 || s.labels.intent[t] > 1)
          throw FormatError("session: label out of range at tick " + std::to_string(t));
      }
    } else if (tag == "EVNT") {
      if (body.size() % 8) throw FormatError("session: truncated EVNT");
      s.onsets.resize(body.size() / 8);
      for (auto& v : s.onsets) v = c.f64();
    }  // unknown chunks are skipped
  }
  if (!r.done()) throw FormatError("session: trailing bytes");
  if (s.accel.size() % 3) throw FormatError("session: accel chunk is not 3-channel");
  return s;
}

inline void save_session(const std::string& path, const Session& s) {
  nn::detail::write_file(path, encode_session(s));
}

inline Session load_session(const std::string& path) {
  return decode_session(nn::detail::read_file(path));
}

}  // namespace rts::data
