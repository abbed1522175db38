// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>

#include "rts/features/timeline.hpp"
#include "rts/synth/checks.hpp"

namespace rs = rts::synth;
namespace rd = rts::data;

namespace {

rd::Scenario scen(const char* tag) { return rd::Scenario::parse(tag); }

const rs::SubjectProfile& profile() {
  static const auto p = rs::SubjectProfile::sample(3, 42);
  return p;
}

// Run-length encoding of the gesture label sequence.
std::vector<std::uint8_t> runs(const std::vector<std::uint8_t>& v) {
  std::vector<std::uint8_t> r;
  for (auto x : v)
    if (r.empty() || r.back() != x) r.push_back(x);
  return r;
}

}  // namespace

TEST(Synth, QuietSittingNegativeHasNoRaise) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = rs::generate_session(profile(), scen("sitting/quiet/neg"), seed);
    EXPECT_TRUE(s.onsets.empty());
    for (auto g : s.labels.gesture) EXPECT_EQ(g, rd::kDropped);
    for (auto i : s.labels.intent) EXPECT_EQ(i, 0);
  }
}

TEST(Synth, PositiveFollowsRaiseThenSpeakPattern) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = rs::generate_session(profile(), scen("sitting/quiet/pos"), seed);
    ASSERT_FALSE(s.onsets.empty());
    EXPECT_FALSE(rs::check_label_grammar(s.labels).has_value());
    EXPECT_FALSE(rs::check_onsets(s).has_value()) << *rs::check_onsets(s);
    // Every onset: preceded by a raising run, inside a raised run, speech on.
    for (double o : s.onsets) {
      auto t = static_cast<std::size_t>(std::llround(o / 0.1));
      EXPECT_EQ(s.labels.gesture[t], rd::kRaised);
      EXPECT_EQ(s.labels.speech[t], 1);
      std::size_t k = t;
      while (k > 0 && s.labels.gesture[k] == rd::kRaised) --k;
      EXPECT_EQ(s.labels.gesture[k], rd::kRaising);
      // Speech starts inside the raised run: the tick before the onset is silent.
      EXPECT_EQ(s.labels.speech[t - 1], 0);
    }
    const auto r = runs(s.labels.gesture);
    EXPECT_EQ(r.front(), rd::kDropped);
    EXPECT_EQ(r.back(), rd::kDropped);
  }
}

TEST(Synth, Deterministic) {
  const auto a = rs::generate_session(profile(), scen("walking/crowd/pos"), 7);
  const auto b = rs::generate_session(profile(), scen("walking/crowd/pos"), 7);
  EXPECT_EQ(rd::encode_session(a), rd::encode_session(b));
  const auto c = rs::generate_session(profile(), scen("walking/crowd/pos"), 8);
  EXPECT_NE(rd::encode_session(a), rd::encode_session(c));
}

TEST(Synth, DurationAndStreamLengths) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto s = rs::generate_session(profile(), scen(seed % 2 ? "running/gym/pos" : "lying/park/neg/phone-same-hand"), seed);
    EXPECT_GE(s.duration(), 8.0);
    EXPECT_LE(s.duration(), 20.0);
    EXPECT_EQ(s.audio.size(), s.labels.size() * 1600);
    EXPECT_EQ(s.accel.size(), s.labels.size() * 30);
    for (float x : s.audio) ASSERT_TRUE(std::isfinite(x) && std::abs(x) <= 1.0f);
    for (float x : s.accel) ASSERT_TRUE(std::isfinite(x));
  }
}

TEST(Synth, TickCountMatchesShortestStream) {
  const auto s = rs::generate_session(profile(), scen("standing/meeting/pos"), 3);
  const auto tl = rts::features::featurize(s.audio, s.accel);
  const double min_dur = std::min(s.audio_seconds(), s.accel_seconds());
  EXPECT_EQ(tl.ticks, static_cast<std::size_t>(std::floor(min_dur / 0.1 + 1e-9)));
  EXPECT_EQ(tl.ticks, s.labels.size());
}

TEST(Synth, CheckTimeTalking) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = rs::generate_session(profile(), scen("standing/quiet/neg/check-time-talking"), seed);
    bool raised_and_speech = false;
    for (std::size_t t = 0; t < s.labels.size(); ++t)
      raised_and_speech |= s.labels.gesture[t] == rd::kRaised && s.labels.speech[t];
    EXPECT_TRUE(raised_and_speech);
    for (auto i : s.labels.intent) EXPECT_EQ(i, 0);
    EXPECT_TRUE(s.onsets.empty());
    // Speech is already running when the raise begins.
    std::size_t first_raise = 0;
    while (s.labels.gesture[first_raise] != rd::kRaising) ++first_raise;
    EXPECT_EQ(s.labels.speech[first_raise], 1);
  }
}

TEST(Synth, RaiseAndCoughHasNoSpeechLabel) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = rs::generate_session(profile(), scen("sitting/quiet/neg/raise-and-cough"), seed);
    bool raised = false;
    for (std::size_t t = 0; t < s.labels.size(); ++t) {
      EXPECT_EQ(s.labels.speech[t], 0);
      raised |= s.labels.gesture[t] == rd::kRaised;
    }
    EXPECT_TRUE(raised);
    // The burst is audible: raised-phase energy well above the quiet bed.
    double peak = 0;
    for (float x : s.audio) peak = std::max(peak, double(std::abs(x)));
    EXPECT_GT(peak, 0.05);
  }
}

TEST(Synth, SteeringTurnStaysDropped) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = rs::generate_session(profile(), scen("driving/quiet/neg/steering-turn-speak"), seed);
    for (auto g : s.labels.gesture) EXPECT_EQ(g, rd::kDropped);
    bool speech = false;
    for (auto v : s.labels.speech) speech |= v == 1;
    EXPECT_TRUE(speech);
  }
}

TEST(Synth, AllScenarioKindsPassChecks) {
  rs::CorpusConfig cfg;
  cfg.n_subjects = 10;
  cfg.sessions_per_subject = 12;
  cfg.seed = 5;
  const auto plan = rs::plan_corpus(cfg);
  for (const auto& sp : plan.sessions) {
    const auto s = rs::realize(plan, sp);
    ASSERT_FALSE(rs::check_label_grammar(s.labels).has_value()) << sp.id << " " << sp.scenario.tag();
    ASSERT_FALSE(rs::check_onsets(s).has_value()) << sp.id << " " << *rs::check_onsets(s);
  }
}

TEST(Corpus, SplitCountsFollowRatios) {
  rs::CorpusConfig cfg;
  cfg.n_subjects = 100;
  cfg.sessions_per_subject = 2;
  const auto plan = rs::plan_corpus(cfg);
  EXPECT_EQ(plan.subject_counts(), (std::array<std::size_t, 3>{70, 15, 15}));
  EXPECT_FALSE(rs::check_subject_disjoint(plan.sessions).has_value());
  EXPECT_EQ(rs::split_sizes(60, cfg.split), (std::array<std::size_t, 3>{42, 9, 9}));
  EXPECT_EQ(rs::split_sizes(10, cfg.split), (std::array<std::size_t, 3>{7, 2, 1}));
}

TEST(Corpus, PositiveFractionNearHalf) {
  rs::CorpusConfig cfg;
  cfg.n_subjects = 50;
  cfg.sessions_per_subject = 21;  // odd per-subject count
  const auto plan = rs::plan_corpus(cfg);
  ASSERT_GE(plan.sessions.size(), 1000u);
  std::size_t pos = 0;
  for (const auto& s : plan.sessions) pos += s.scenario.positive;
  const double frac = double(pos) / plan.sessions.size();
  EXPECT_GE(frac, 0.45);
  EXPECT_LE(frac, 0.55);
}

TEST(Corpus, BadConfigRejected) {
  rs::CorpusConfig cfg;
  cfg.split = {0.7, 0.2, 0.2};
  EXPECT_THROW(rs::plan_corpus(cfg), rts::InvalidInput);
  cfg.split = {0.7, 0.15, 0.15};
  cfg.n_subjects = 9;
  EXPECT_THROW(rs::plan_corpus(cfg), rts::InvalidInput);
}

TEST(Corpus, PlanDeterministic) {
  rs::CorpusConfig cfg;
  cfg.n_subjects = 12;
  cfg.sessions_per_subject = 4;
  const auto a = rs::plan_corpus(cfg), b = rs::plan_corpus(cfg);
  ASSERT_EQ(a.sessions.size(), b.sessions.size());
  for (std::size_t i = 0; i < a.sessions.size(); ++i) {
    EXPECT_EQ(a.sessions[i].seed, b.sessions[i].seed);
    EXPECT_EQ(a.sessions[i].scenario, b.sessions[i].scenario);
  }
  cfg.seed = 2;
  const auto c = rs::plan_corpus(cfg);
  EXPECT_NE(a.sessions[0].seed, c.sessions[0].seed);
}

TEST(Corpus, ChallengeSetSize) {
  std::vector<rs::SubjectProfile> profs = {rs::SubjectProfile::sample(0, 1), rs::SubjectProfile::sample(1, 1)};
  const auto set = rs::plan_challenge_set(profs, 3, 9);
  EXPECT_EQ(set.size(), 15u);
  std::map<rd::Challenge, int> per;
  for (const auto& s : set) {
    EXPECT_FALSE(s.scenario.positive);
    ++per[s.scenario.challenge];
  }
  EXPECT_EQ(per.size(), 5u);
  for (auto [c, n] : per) EXPECT_EQ(n, 3);
  EXPECT_TRUE(rs::plan_challenge_set(profs, 0, 9).empty());
}

TEST(Corpus, WriteAndReadManifest) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "rts_test_corpus";
  fs::remove_all(dir);
  rs::CorpusConfig cfg;
  cfg.n_subjects = 10;
  cfg.sessions_per_subject = 1;
  cfg.synth.min_duration = cfg.synth.max_duration = 8;
  const auto plan = rs::plan_corpus(cfg);
  const auto recs = rs::write_corpus(plan, plan.sessions, dir);
  const auto back = rs::read_manifest((dir / "manifest.jsonl").string());
  ASSERT_EQ(back.size(), 10u);
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].id, recs[i].id);
    const auto s = rd::load_session((dir / back[i].path).string());
    EXPECT_EQ(s, rs::realize(plan, plan.sessions[i]));
  }
  fs::remove_all(dir);
}
