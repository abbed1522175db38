// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "rts/common.hpp"
#include "rts/synth/generator.hpp"

namespace rts::synth {

enum class Split : std::uint8_t { kTrain, kVal, kTest };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

inline Split parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw InvalidInput("unknown split: " + std::string(s));
}

struct CorpusConfig {
  std::size_t n_subjects = 60;
  std::size_t sessions_per_subject = 34;
  std::array<double, 3> split{0.70, 0.15, 0.15};
  std::uint64_t seed = 1;
  SynthConfig synth;

  void validate() const {
    if (n_subjects < 10) throw InvalidInput("corpus: need at least 10 subjects");
    if (sessions_per_subject == 0) throw InvalidInput("corpus: sessions_per_subject must be positive");
    for (double f : split)
      if (f < 0) throw InvalidInput("corpus: negative split fraction");
    if (std::abs(split[0] + split[1] + split[2] - 1.0) > 1e-9)
      throw InvalidInput("corpus: split fractions must sum to 1");
    synth.validate();
  }
};

struct SessionPlan {
  std::string id;
  std::uint32_t subject = 0;
  Split split = Split::kTrain;
  Scenario scenario;
  std::uint64_t seed = 0;
};

struct CorpusPlan {
  CorpusConfig config;
  std::vector<SubjectProfile> subjects;
  std::vector<Split> subject_split;  // indexed by subject id
  std::vector<SessionPlan> sessions;

  std::array<std::size_t, 3> subject_counts() const {
    std::array<std::size_t, 3> c{};
    for (auto s : subject_split) ++c[static_cast<std::size_t>(s)];
    return c;
  }
};

namespace detail {

template <std::size_t N>
std::size_t weighted_pick(const std::array<double, N>& w, std::mt19937_64& rng) {
  std::discrete_distribution<std::size_t> d(w.begin(), w.end());
  return d(rng);
}

}  // namespace detail

// Subject counts per split: train and val rounded, test takes the rest.
inline std::array<std::size_t, 3> split_sizes(std::size_t n, const std::array<double, 3>& f) {
  const auto tr = static_cast<std::size_t>(std::llround(f[0] * static_cast<double>(n)));
  const auto va = std::min(n - std::min(n, tr), static_cast<std::size_t>(std::llround(f[1] * static_cast<double>(n))));
  return {std::min(n, tr), va, n - std::min(n, tr) - va};
}

// Deterministic corpus layout: subject profiles, subject-disjoint splits and
// one scenario per session. Sessions are synthesized later by realize().
inline CorpusPlan plan_corpus(const CorpusConfig& cfg) {
  cfg.validate();
  CorpusPlan plan;
  plan.config = cfg;
  std::mt19937_64 rng(mix_seed(cfg.seed, 0xc0));
  for (std::size_t i = 0; i < cfg.n_subjects; ++i)
    plan.subjects.push_back(SubjectProfile::sample(static_cast<std::uint32_t>(i), cfg.seed, cfg.synth));

  std::vector<std::size_t> order(cfg.n_subjects);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto sizes = split_sizes(cfg.n_subjects, cfg.split);
  plan.subject_split.assign(cfg.n_subjects, Split::kTrain);
  for (std::size_t k = 0; k < cfg.n_subjects; ++k)
    plan.subject_split[order[k]] = k < sizes[0] ? Split::kTrain : k < sizes[0] + sizes[1] ? Split::kVal : Split::kTest;

  const std::size_t m = cfg.sessions_per_subject;
  const auto n_pos = static_cast<std::size_t>(std::llround(cfg.synth.positive_fraction * static_cast<double>(m)));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t subj = 0; subj < cfg.n_subjects; ++subj) {
    std::vector<bool> positive(m, false);
    std::fill(positive.begin(), positive.begin() + static_cast<long>(n_pos), true);
    std::shuffle(positive.begin(), positive.end(), rng);
    for (std::size_t k = 0; k < m; ++k) {
      SessionPlan sp;
      char buf[32];
      std::snprintf(buf, sizeof buf, "s%03zu_%03zu", subj, k);
      sp.id = buf;
      sp.subject = static_cast<std::uint32_t>(subj);
      sp.split = plan.subject_split[subj];
      sp.seed = mix_seed(cfg.seed, (static_cast<std::uint64_t>(subj) << 20) + k);
      sp.scenario.positive = positive[k];
      sp.scenario.activity = static_cast<Activity>(detail::weighted_pick(cfg.synth.activity_weights, rng));
      sp.scenario.environment = static_cast<Environment>(detail::weighted_pick(cfg.synth.environment_weights, rng));
      if (!sp.scenario.positive && u(rng) < cfg.synth.challenge_fraction) {
        sp.scenario.challenge = data::kChallenges[static_cast<std::size_t>(u(rng) * 5) % 5];
        if (sp.scenario.challenge == Challenge::kSteeringTurnSpeak) sp.scenario.activity = Activity::kDriving;
      }
      plan.sessions.push_back(std::move(sp));
    }
  }
  return plan;
}

inline Session realize(const CorpusPlan& plan, const SessionPlan& sp) {
  return generate_session(plan.subjects.at(sp.subject), sp.scenario, sp.seed, plan.config.synth, sp.id);
}

// Five challenge scenarios x per_scenario negative sessions, cycling
// through the given profiles.
inline std::vector<SessionPlan> plan_challenge_set(const std::vector<SubjectProfile>& profiles,
                                                   std::size_t per_scenario, std::uint64_t seed,
                                                   const SynthConfig& cfg = {}) {
  if (profiles.empty() && per_scenario > 0) throw InvalidInput("challenge set: no profiles");
  std::mt19937_64 rng(mix_seed(seed, 0xc4a1));
  std::vector<SessionPlan> out;
  for (std::size_t c = 0; c < data::kChallenges.size(); ++c)
    for (std::size_t k = 0; k < per_scenario; ++k) {
      SessionPlan sp;
      const auto& prof = profiles[(c * per_scenario + k) % profiles.size()];
      sp.id = "c" + std::to_string(c) + "_" + std::to_string(k);
      sp.subject = prof.id;
      sp.split = Split::kTest;
      sp.seed = mix_seed(seed, 0x10000 + c * 4096 + k);
      sp.scenario.positive = false;
      sp.scenario.challenge = data::kChallenges[c];
      sp.scenario.activity = sp.scenario.challenge == Challenge::kSteeringTurnSpeak
                                 ? Activity::kDriving
                                 : static_cast<Activity>(detail::weighted_pick(cfg.activity_weights, rng));
      sp.scenario.environment = static_cast<Environment>(detail::weighted_pick(cfg.environment_weights, rng));
      out.push_back(std::move(sp));
    }
  return out;
}

// Manifest: one JSON object per line.
struct ManifestRecord {
  std::string id, path;
  Split split = Split::kTrain;
  std::uint32_t subject = 0;
  std::string scenario, challenge;
  bool positive = false;
  std::size_t ticks = 0;
  double duration = 0;
};

inline nlohmann::json to_json(const ManifestRecord& r) {
  return {{"id", r.id},         {"path", r.path},         {"split", split_name(r.split)},
          {"subject", r.subject}, {"scenario", r.scenario}, {"challenge", r.challenge},
          {"positive", r.positive}, {"ticks", r.ticks},    {"duration", r.duration}};
}

inline ManifestRecord manifest_record(const nlohmann::json& j) {
  ManifestRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.path = j.at("path").get<std::string>();
    r.split = parse_split(j.at("split").get<std::string>());
    r.subject = j.at("subject").get<std::uint32_t>();
    r.scenario = j.at("scenario").get<std::string>();
    r.challenge = j.value("challenge", std::string("none"));
    r.positive = j.at("positive").get<bool>();
    r.ticks = j.value("ticks", std::size_t{0});
    r.duration = j.value("duration", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest record: ") + e.what());
  }
  return r;
}

inline std::vector<ManifestRecord> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact(path);
  std::vector<ManifestRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(manifest_record(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

// Writes sessions/<id>.rtss for every planned session plus manifest.jsonl.
// Sessions are generated in parallel; the manifest is written in plan order.
inline std::vector<ManifestRecord> write_corpus(const CorpusPlan& plan,
                                                const std::vector<SessionPlan>& sessions,
                                                const std::filesystem::path& dir,
                                                const std::string& manifest_name = "manifest.jsonl") {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "sessions");
  std::vector<ManifestRecord> recs(sessions.size());
  parallel_for(sessions.size(), [&](std::size_t i) {
    const auto& sp = sessions[i];
    const Session s = realize(plan, sp);
    const std::string rel = "sessions/" + sp.id + ".rtss";
    data::save_session((dir / rel).string(), s);
    auto& r = recs[i];
    r.id = sp.id;
    r.path = rel;
    r.split = sp.split;
    r.subject = sp.subject;
    r.scenario = sp.scenario.tag();
    r.challenge = std::string(data::name(sp.scenario.challenge));
    r.positive = sp.scenario.positive;
    r.ticks = s.labels.size();
    r.duration = s.duration();
  });
  std::ofstream out(dir / manifest_name, std::ios::trunc);
  if (!out) throw Error("cannot write " + (dir / manifest_name).string());
  for (const auto& r : recs) out << to_json(r).dump() << '\n';
  return recs;
}

}  // namespace rts::synth
