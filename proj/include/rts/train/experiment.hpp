// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "rts/synth/corpus.hpp"
#include "rts/train/config.hpp"

namespace rts::train {

inline constexpr int kExperimentSchemaVersion = 1;

inline nlohmann::json synth_to_json(const synth::SynthConfig& s) {
  return {{"min_duration", s.min_duration},
          {"max_duration", s.max_duration},
          {"positive_fraction", s.positive_fraction},
          {"challenge_fraction", s.challenge_fraction},
          {"noise_scale", s.noise_scale},
          {"accel_noise_scale", s.accel_noise_scale},
          {"subject_bias", s.subject_bias},
          {"pose_jitter", s.pose_jitter},
          {"speech_level_raised", s.speech_level_raised},
          {"speech_level_down", s.speech_level_down},
          {"activity_weights", s.activity_weights},
          {"environment_weights", s.environment_weights}};
}

inline synth::SynthConfig synth_from_json(const nlohmann::json& j) {
  synth::SynthConfig s;
  s.min_duration = j.value("min_duration", s.min_duration);
  s.max_duration = j.value("max_duration", s.max_duration);
  s.positive_fraction = j.value("positive_fraction", s.positive_fraction);
  s.challenge_fraction = j.value("challenge_fraction", s.challenge_fraction);
  s.noise_scale = j.value("noise_scale", s.noise_scale);
  s.accel_noise_scale = j.value("accel_noise_scale", s.accel_noise_scale);
  s.subject_bias = j.value("subject_bias", s.subject_bias);
  s.pose_jitter = j.value("pose_jitter", s.pose_jitter);
  s.speech_level_raised = j.value("speech_level_raised", s.speech_level_raised);
  s.speech_level_down = j.value("speech_level_down", s.speech_level_down);
  s.activity_weights = j.value("activity_weights", s.activity_weights);
  s.environment_weights = j.value("environment_weights", s.environment_weights);
  return s;
}

inline nlohmann::json corpus_to_json(const synth::CorpusConfig& c) {
  return {{"n_subjects", c.n_subjects},
          {"sessions_per_subject", c.sessions_per_subject},
          {"split", c.split},
          {"seed", c.seed},
          {"synth", synth_to_json(c.synth)}};
}

inline synth::CorpusConfig corpus_from_json(const nlohmann::json& j) {
  synth::CorpusConfig c;
  c.n_subjects = j.value("n_subjects", c.n_subjects);
  c.sessions_per_subject = j.value("sessions_per_subject", c.sessions_per_subject);
  c.split = j.value("split", c.split);
  c.seed = j.value("seed", c.seed);
  if (j.contains("synth")) c.synth = synth_from_json(j.at("synth"));
  return c;
}

// Everything a run depends on besides the command line. Stored as JSON with
// a schema_version field; unknown keys are rejected.
struct ExperimentConfig {
  synth::CorpusConfig corpus;
  std::size_t challenge_per_scenario = 40;
  TrainConfig train;
  std::size_t fsm_budget = 2000;
  double target_frr = 0.2;
  double frr_tolerance = 0.01;
  std::size_t bench_iters = 30;
  std::size_t bench_warmup = 5;

  // A single seed drives corpus synthesis and all training randomness.
  void set_seed(std::uint64_t seed) {
    corpus.seed = seed;
    train.seed = seed;
  }
  std::uint64_t seed() const { return train.seed; }

  void validate() const {
    corpus.validate();
    train.validate();
    if (fsm_budget == 0) throw InvalidInput("config: fsm_budget must be positive");
    if (!(target_frr > 0 && target_frr < 1) || !(frr_tolerance > 0))
      throw InvalidInput("config: bad FRR calibration target");
    if (bench_iters == 0) throw InvalidInput("config: bench_iters must be positive");
  }

  nlohmann::json to_json() const {
    return {{"schema_version", kExperimentSchemaVersion},
            {"corpus", corpus_to_json(corpus)},
            {"challenge_per_scenario", challenge_per_scenario},
            {"train", train.to_json()},
            {"fsm_budget", fsm_budget},
            {"target_frr", target_frr},
            {"frr_tolerance", frr_tolerance},
            {"bench_iters", bench_iters},
            {"bench_warmup", bench_warmup}};
  }

  static ExperimentConfig from_json(const nlohmann::json& j) {
    static const char* known[] = {"schema_version", "corpus",        "challenge_per_scenario",
                                  "train",          "fsm_budget",    "target_frr",
                                  "frr_tolerance",  "bench_iters",   "bench_warmup"};
    if (!j.is_object()) throw FormatError("config: expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
      if (std::find(std::begin(known), std::end(known), it.key()) == std::end(known))
        throw FormatError("config: unknown key '" + it.key() + "'");
    if (j.value("schema_version", 0) != kExperimentSchemaVersion)
      throw FormatError("config: schema_version must be " + std::to_string(kExperimentSchemaVersion));
    ExperimentConfig c;
    try {
      if (j.contains("corpus")) c.corpus = corpus_from_json(j.at("corpus"));
      c.challenge_per_scenario = j.value("challenge_per_scenario", c.challenge_per_scenario);
      if (j.contains("train")) c.train = TrainConfig::from_json(j.at("train"));
      c.fsm_budget = j.value("fsm_budget", c.fsm_budget);
      c.target_frr = j.value("target_frr", c.target_frr);
      c.frr_tolerance = j.value("frr_tolerance", c.frr_tolerance);
      c.bench_iters = j.value("bench_iters", c.bench_iters);
      c.bench_warmup = j.value("bench_warmup", c.bench_warmup);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
  }

  static ExperimentConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifact(path);
    std::stringstream ss;
    ss << in.rdbuf();
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(path + ": " + e.what());
    }
    return from_json(j);
  }

  std::string hash() const { return hex64(fnv1a64(to_json().dump())); }
};

}  // namespace rts::train
