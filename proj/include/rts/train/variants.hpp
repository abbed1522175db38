// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "rts/fusion/fsm.hpp"
#include "rts/fusion/policy.hpp"

namespace rts::train {

// One point of the experiment grid: detector depths plus a fusion policy.
struct VariantSpec {
  std::string key;  // "a".."f" for the named candidates, else the long name
  std::size_t n_speech = 1, n_gesture = 1;
  bool fsm = false;
  fusion::FusionType fusion = fusion::FusionType::kSoftmax;  // neural input
  fusion::FsmInput fsm_input = fusion::FsmInput::kSoftmax;
  std::size_t h_dim = 0;  // 0 for FSM rows

  // Long, unambiguous name, e.g. "logit-h64-s3-g1" or "fsm-softmax-s1-g1".
  std::string name() const {
    const std::string depth = "-s" + std::to_string(n_speech) + "-g" + std::to_string(n_gesture);
    if (fsm) return std::string("fsm-") + fusion::fsm_input_name(fsm_input) + depth;
    return std::string(fusion::fusion_name(fusion)) + "-h" + std::to_string(h_dim) + depth;
  }

  std::string fusion_label() const {
    return fsm ? std::string("FSM(") + fusion::fsm_input_name(fsm_input) + ")" : fusion::fusion_name(fusion);
  }

  fusion::PolicyConfig policy_config() const {
    fusion::PolicyConfig pc;
    pc.fusion = fusion;
    pc.h_dim = h_dim;
    return pc;
  }

  std::size_t policy_parameters() const { return fsm ? 0 : policy_config().parameter_count(); }
};

inline VariantSpec neural_variant(std::size_t ns, std::size_t ng, fusion::FusionType f, std::size_t h) {
  VariantSpec v;
  v.n_speech = ns;
  v.n_gesture = ng;
  v.fusion = f;
  v.h_dim = h;
  v.key = v.name();
  return v;
}

inline VariantSpec fsm_variant(std::size_t ns, std::size_t ng, fusion::FsmInput in) {
  VariantSpec v;
  v.n_speech = ns;
  v.n_gesture = ng;
  v.fsm = true;
  v.fsm_input = in;
  v.key = v.name();
  return v;
}

// The six named candidates (a)-(f).
inline VariantSpec candidate(char c) {
  using fusion::FusionType;
  VariantSpec v;
  switch (c) {
    case 'a': v = fsm_variant(1, 1, fusion::FsmInput::kSoftmax); break;
    case 'b': v = neural_variant(1, 1, FusionType::kSoftmax, 32); break;
    case 'c': v = neural_variant(1, 1, FusionType::kSoftmax, 64); break;
    case 'd': v = neural_variant(1, 1, FusionType::kLogit, 64); break;
    case 'e': v = neural_variant(3, 1, FusionType::kLogit, 64); break;
    case 'f': v = neural_variant(5, 1, FusionType::kLogit, 64); break;
    default: throw InvalidInput(std::string("unknown candidate '") + c + "'");
  }
  v.key = std::string(1, c);
  return v;
}

inline std::vector<VariantSpec> default_candidates() {
  std::vector<VariantSpec> out;
  for (char c : std::string("abcdef")) out.push_back(candidate(c));
  return out;
}

// Full grid: 2 h x 3 n_s x 3 n_g x 2 fusion neural rows plus 3 x 3 x 2 FSM rows.
inline std::vector<VariantSpec> all_variants() {
  std::vector<VariantSpec> out;
  for (std::size_t ns : {1, 3, 5})
    for (std::size_t ng : {1, 3, 5}) {
      for (auto f : {fusion::FusionType::kSoftmax, fusion::FusionType::kLogit})
        for (std::size_t h : {32, 64}) out.push_back(neural_variant(ns, ng, f, h));
      for (auto in : {fusion::FsmInput::kSoftmax, fusion::FsmInput::kLogit}) out.push_back(fsm_variant(ns, ng, in));
    }
  return out;
}

// Accepts single letters a-f, long names from all_variants(), or "all".
inline VariantSpec parse_variant(const std::string& s) {
  if (s.size() == 1) return candidate(s[0]);
  for (const auto& v : all_variants())
    if (v.name() == s) return v;
  throw InvalidInput("unknown variant '" + s + "'");
}

inline std::vector<VariantSpec> parse_variants(const std::string& list) {
  if (list == "all") return all_variants();
  std::vector<VariantSpec> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const auto comma = list.find(',', pos);
    const auto item = list.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (item.empty()) throw InvalidInput("empty variant in list '" + list + "'");
    out.push_back(parse_variant(item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace rts::train
