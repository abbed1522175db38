// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rts/features/timeline.hpp"
#include "rts/synth/corpus.hpp"

namespace rts::train {

using synth::Split;

// Featurized session with its ground truth, ready for training and scoring.
struct Example {
  std::string id;
  Split split = Split::kTrain;
  std::uint32_t subject = 0;
  data::Scenario scenario;
  double duration = 0;
  std::vector<double> onsets;
  data::TickLabels labels;
  nn::Tensor<float> audio;    // [T x 400]
  nn::Tensor<float> gesture;  // [T x 31]

  std::size_t ticks() const { return labels.size(); }
};

inline Example make_example(const data::Session& s, Split split) {
  auto tl = features::featurize(s.audio, s.accel);
  if (tl.ticks != s.labels.size())
    throw ShapeMismatch("session " + s.id + ": " + std::to_string(tl.ticks) + " feature ticks vs " +
                        std::to_string(s.labels.size()) + " label ticks");
  Example e;
  e.id = s.id;
  e.split = split;
  e.subject = s.subject;
  e.scenario = s.scenario;
  e.duration = s.duration();
  e.onsets = s.onsets;
  e.labels = s.labels;
  e.audio = std::move(tl.audio);
  e.gesture = std::move(tl.gesture);
  return e;
}

struct Dataset {
  std::vector<Example> examples;

  std::vector<const Example*> split(Split s) const {
    std::vector<const Example*> out;
    for (const auto& e : examples)
      if (e.split == s) out.push_back(&e);
    return out;
  }
};

// Loads and featurizes every manifest record whose split is selected.
inline Dataset load_dataset(const std::filesystem::path& dir, const std::vector<Split>& splits,
                            const std::string& manifest = "manifest.jsonl") {
  const auto recs = synth::read_manifest((dir / manifest).string());
  std::vector<synth::ManifestRecord> keep;
  for (const auto& r : recs)
    if (std::find(splits.begin(), splits.end(), r.split) != splits.end()) keep.push_back(r);
  Dataset d;
  d.examples.resize(keep.size());
  parallel_for(keep.size(), [&](std::size_t i) {
    const auto s = data::load_session((dir / keep[i].path).string());
    d.examples[i] = make_example(s, keep[i].split);
  });
  return d;
}

// Featurizes planned sessions directly, without touching disk.
inline Dataset realize_dataset(const synth::CorpusPlan& plan, const std::vector<synth::SessionPlan>& sessions) {
  Dataset d;
  d.examples.resize(sessions.size());
  parallel_for(sessions.size(), [&](std::size_t i) {
    d.examples[i] = make_example(synth::realize(plan, sessions[i]), sessions[i].split);
  });
  return d;
}

}  // namespace rts::train
