// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "rts/detectors/detector.hpp"
#include "rts/eval/metrics.hpp"
#include "rts/fusion/policy.hpp"
#include "rts/train/dataset.hpp"

namespace rts::train {

// Frozen-detector outputs for one session: raw logits [gesture(4) | speech(2)]
// per tick plus the ground truth needed downstream.
struct CachedSession {
  std::string id;
  Split split = Split::kTrain;
  std::uint32_t subject = 0;
  data::Scenario scenario;
  double duration = 0;
  std::vector<double> onsets;
  std::vector<std::uint8_t> intent;
  nn::Tensor<float> logits;  // [T x 6]

  // Fusion input for the given variant.
  nn::Tensor<float> fused(fusion::FusionType type) const {
    if (type == fusion::FusionType::kLogit) return logits;
    nn::Tensor<float> out(logits.shape);
    for (std::size_t t = 0; t < logits.rows(); ++t) {
      const auto r = logits.row(t);
      auto o = out.row(t);
      nn::softmax(r.subspan(0, 4), o.subspan(0, 4));
      nn::softmax(r.subspan(4, 2), o.subspan(4, 2));
    }
    return out;
  }

  eval::ScoredSession scored(std::vector<float> scores) const {
    eval::ScoredSession s;
    s.id = id;
    s.positive = scenario.positive;
    s.challenge = scenario.challenge;
    s.duration = duration;
    s.onsets = onsets;
    s.scores = std::move(scores);
    return s;
  }
};

struct ScoreCache {
  std::string speech_id, gesture_id;  // detector checkpoint digests
  std::vector<CachedSession> sessions;

  std::vector<const CachedSession*> split(Split s) const {
    std::vector<const CachedSession*> out;
    for (const auto& c : sessions)
      if (c.split == s) out.push_back(&c);
    return out;
  }

  std::size_t ticks() const {
    std::size_t n = 0;
    for (const auto& s : sessions) n += s.logits.rows();
    return n;
  }
};

inline std::string checkpoint_digest(const nn::Checkpoint& ck) { return hex64(fnv1a64(nn::encode_checkpoint(ck))); }

// Runs both frozen detectors in streaming mode over one featurized session.
inline CachedSession score_example(const Detector& speech, const Detector& gesture, const Example& e) {
  CachedSession c;
  c.id = e.id;
  c.split = e.split;
  c.subject = e.subject;
  c.scenario = e.scenario;
  c.duration = e.duration;
  c.onsets = e.onsets;
  c.intent = e.labels.intent;
  c.logits = nn::Tensor<float>({e.ticks(), fusion::kFusionDims});
  detectors::DetectorStream ss(speech), gs(gesture);
  nn::Tensor<float> s({e.ticks(), 2}), g({e.ticks(), 4});
  for (std::size_t t = 0; t < e.ticks(); ++t) {
    const double ts = static_cast<double>(t) * kTickSeconds;
    const auto so = ss.step(e.audio.row(t), ts);
    std::copy(so.begin(), so.end(), s.row(t).begin());
    const auto go = gs.step(e.gesture.row(t), ts);
    std::copy(go.begin(), go.end(), g.row(t).begin());
  }
  c.logits = fusion::align_and_merge(s, g, fusion::FusionType::kLogit);
  return c;
}

inline ScoreCache score_corpus(const Detector& speech, const Detector& gesture, const Dataset& data) {
  if (speech.config().modality != Modality::kSpeech || gesture.config().modality != Modality::kGesture)
    throw ShapeMismatch("score_corpus: detector modalities do not match their roles");
  ScoreCache cache;
  cache.speech_id = checkpoint_digest(speech.to_checkpoint());
  cache.gesture_id = checkpoint_digest(gesture.to_checkpoint());
  cache.sessions.resize(data.examples.size());
  parallel_for(data.examples.size(),
               [&](std::size_t i) { cache.sessions[i] = score_example(speech, gesture, data.examples[i]); });
  return cache;
}

inline constexpr std::uint16_t kCacheVersion = 1;

inline std::string encode_cache(const ScoreCache& c) {
  nn::detail::ByteWriter w;
  w.bytes("RTSC");
  w.u16(kCacheVersion);
  w.str16(c.speech_id);
  w.str16(c.gesture_id);
  w.u32(static_cast<std::uint32_t>(c.sessions.size()));
  for (const auto& s : c.sessions) {
    w.str16(s.id);
    w.u8(static_cast<std::uint8_t>(s.split));
    w.u32(s.subject);
    w.str16(s.scenario.tag());
    w.f64(s.duration);
    w.u32(static_cast<std::uint32_t>(s.onsets.size()));
    for (double o : s.onsets) w.f64(o);
    w.u32(static_cast<std::uint32_t>(s.logits.rows()));
    for (auto v : s.intent) w.u8(v);
    for (float v : s.logits.data) w.f32(v);
  }
  return w.take();
}

inline ScoreCache decode_cache(std::string_view bytes) {
  nn::detail::ByteReader r(bytes);
  if (r.bytes(4) != "RTSC") throw FormatError("score cache: bad magic");
  if (r.u16() != kCacheVersion) throw FormatError("score cache: unsupported version");
  ScoreCache c;
  c.speech_id = r.str16();
  c.gesture_id = r.str16();
  const auto n = r.u32();
  c.sessions.resize(n);
  for (auto& s : c.sessions) {
    s.id = r.str16();
    const auto sp = r.u8();
    if (sp > 2) throw FormatError("score cache: bad split");
    s.split = static_cast<Split>(sp);
    s.subject = r.u32();
    s.scenario = data::Scenario::parse(r.str16());
    s.duration = std::bit_cast<double>(r.u64());
    s.onsets.resize(r.u32());
    for (auto& o : s.onsets) o = std::bit_cast<double>(r.u64());
    const auto ticks = r.u32();
    s.intent.resize(ticks);
    for (auto& v : s.intent) v = r.u8();
    s.logits = nn::Tensor<float>({ticks, fusion::kFusionDims});
    for (auto& v : s.logits.data) v = std::bit_cast<float>(r.u32());
  }
  if (r.remaining()) throw FormatError("score cache: trailing bytes");
  return c;
}

inline void save_cache(const std::string& path, const ScoreCache& c) { nn::detail::write_file(path, encode_cache(c)); }
inline ScoreCache load_cache(const std::string& path) { return decode_cache(nn::detail::read_file(path)); }

}  // namespace rts::train
