// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>

#include "rts/synth/corpus.hpp"

namespace rts::synth {

// Every transition must follow dropped -> raising -> raised -> dropping -> dropped.
inline std::optional<std::string> check_label_grammar(const data::TickLabels& l) {
  for (std::size_t t = 1; t < l.size(); ++t) {
    const auto a = l.gesture[t - 1], b = l.gesture[t];
    if (a != b && b != (a + 1) % 4)
      return "illegal gesture transition " + std::to_string(a) + "->" + std::to_string(b) +
             " at tick " + std::to_string(t);
  }
  return std::nullopt;
}

inline std::optional<std::string> check_onsets(const Session& s) {
  if (s.scenario.positive && s.onsets.empty()) return "positive session without onsets";
  if (!s.scenario.positive) {
    if (!s.onsets.empty()) return "negative session with onsets";
    for (auto v : s.labels.intent)
      if (v) return "negative session with intent label";
  }
  for (double o : s.onsets) {
    const auto t = static_cast<std::size_t>(std::llround(o / kTickSeconds));
    if (t >= s.labels.size()) return "onset beyond session end";
    if (s.labels.gesture[t] != data::kRaised || !s.labels.speech[t] || !s.labels.intent[t])
      return "onset at tick " + std::to_string(t) + " is not raised+speech";
  }
  return std::nullopt;
}

inline std::optional<std::string> check_subject_disjoint(const std::vector<SessionPlan>& sessions) {
  std::map<std::uint32_t, Split> seen;
  for (const auto& s : sessions) {
    auto [it, fresh] = seen.emplace(s.subject, s.split);
    if (!fresh && it->second != s.split)
      return "subject " + std::to_string(s.subject) + " appears in two splits";
  }
  return std::nullopt;
}

}  // namespace rts::synth
