// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "rts/train/dataset.hpp"
#include "rts/train/detector_trainer.hpp"
#include "rts/train/experiment.hpp"
#include "rts/train/policy_trainer.hpp"
#include "rts/train/score_cache.hpp"
#include "rts/train/variants.hpp"

namespace rts::train {

namespace fs = std::filesystem;

inline constexpr const char* kManifestFile = "manifest.jsonl";
inline constexpr const char* kChallengeFile = "challenge.jsonl";
inline constexpr const char* kCorpusConfigFile = "corpus.json";

inline std::string read_text(const fs::path& p) {
  if (!fs::exists(p)) throw MissingArtifact(p.string());
  return nn::detail::read_file(p.string());
}

inline void write_text(const fs::path& p, const std::string& s) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  nn::detail::write_file(p.string(), s);
}

struct CorpusSummary {
  std::array<std::size_t, 3> subjects{};  // train, val, test
  std::array<std::size_t, 3> sessions{};
  std::size_t challenge_sessions = 0;
  std::string digest;
};

inline std::string corpus_digest(const fs::path& dir) {
  return hex64(fnv1a64(read_text(dir / kChallengeFile), fnv1a64(read_text(dir / kManifestFile))));
}

// Writes the main corpus plus a challenge set drawn from the test subjects.
// A non-empty target directory is only replaced when force is set.
inline CorpusSummary generate_corpus(const synth::CorpusConfig& cfg, std::size_t challenge_per_scenario,
                                     const fs::path& dir, bool force) {
  cfg.validate();
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!force) throw InvalidInput("output directory " + dir.string() + " is not empty (use --force)");
    fs::remove_all(dir);
  }
  const auto plan = synth::plan_corpus(cfg);
  synth::write_corpus(plan, plan.sessions, dir, kManifestFile);
  std::vector<synth::SubjectProfile> test_subjects;
  for (std::size_t s = 0; s < plan.subjects.size(); ++s)
    if (plan.subject_split[s] == Split::kTest) test_subjects.push_back(plan.subjects[s]);
  const auto challenge =
      synth::plan_challenge_set(test_subjects, challenge_per_scenario, mix_seed(cfg.seed, 0xc5), cfg.synth);
  synth::write_corpus(plan, challenge, dir, kChallengeFile);
  write_text(dir / kCorpusConfigFile, corpus_to_json(cfg).dump(2) + "\n");

  CorpusSummary sum;
  sum.subjects = plan.subject_counts();
  for (const auto& s : plan.sessions) ++sum.sessions[static_cast<std::size_t>(s.split)];
  sum.challenge_sessions = challenge.size();
  sum.digest = corpus_digest(dir);
  return sum;
}

// Artifact store for one experiment. Every getter returns a cached artifact
// when present. Absent detectors, policies and FSM configs are trained if
// building is enabled; otherwise MissingArtifact is thrown.
//
//   <root>/detectors/<modality>_n<k>.ckpt
//   <root>/cache/s<ns>_g<ng>[_challenge][_fp16].rtsc
//   <root>/policies/<variant>.ckpt (+ .json summary)
//   <root>/fsm/<variant>.txt (+ .json summary)
//   <root>/logs/*.jsonl
class Workspace {
 public:
  struct Options {
    bool build = true;
    bool fp16 = false;  // serve FP16-rounded detectors and policies
    Logger log;         // progress records; also appended to logs/
  };

  Workspace(fs::path root, fs::path corpus, ExperimentConfig cfg, Options opt)
      : root_(std::move(root)), corpus_(std::move(corpus)), cfg_(std::move(cfg)), opt_(std::move(opt)) {
    cfg_.validate();
    if (!fs::exists(corpus_ / kManifestFile)) {
      if (!opt_.build) throw MissingArtifact((corpus_ / kManifestFile).string());
      progress({{"stage", "gen"}, {"corpus", corpus_.string()}});
      generate_corpus(cfg_.corpus, cfg_.challenge_per_scenario, corpus_, false);
    }
    digest_ = corpus_digest(corpus_);
    check_stamp();
  }

  const fs::path& root() const { return root_; }
  const fs::path& corpus_dir() const { return corpus_; }
  const ExperimentConfig& config() const { return cfg_; }
  const std::string& corpus_id() const { return digest_; }
  bool fp16() const { return opt_.fp16; }

  fs::path detector_path(Modality m, std::size_t n) const {
    return root_ / "detectors" / (std::string(detectors::modality_name(m)) + "_n" + std::to_string(n) + ".ckpt");
  }
  fs::path cache_path(std::size_t ns, std::size_t ng, bool challenge) const {
    return root_ / "cache" /
           ("s" + std::to_string(ns) + "_g" + std::to_string(ng) + (challenge ? "_challenge" : "") +
            (opt_.fp16 ? "_fp16" : "") + ".rtsc");
  }
  fs::path policy_path(const VariantSpec& v) const { return root_ / "policies" / (v.name() + ".ckpt"); }
  fs::path fsm_path(const VariantSpec& v) const { return root_ / "fsm" / (v.name() + ".txt"); }
  fs::path log_path(const std::string& stage) const { return root_ / "logs" / (stage + ".jsonl"); }

  const Dataset& data() {
    if (!data_) {
      progress({{"stage", "load"}, {"set", "main"}});
      data_ = std::make_unique<Dataset>(load_dataset(corpus_, {Split::kTrain, Split::kVal, Split::kTest}, kManifestFile));
    }
    return *data_;
  }

  const Dataset& challenge_data() {
    if (!challenge_) {
      progress({{"stage", "load"}, {"set", "challenge"}});
      challenge_ = std::make_unique<Dataset>(load_dataset(corpus_, {Split::kTest}, kChallengeFile));
    }
    return *challenge_;
  }

  // FP32 master weights; the FP16 variant is derived on load.
  Detector detector(Modality m, std::size_t n) {
    const auto dc = DetectorConfig::for_modality(m, n);
    const auto path = detector_path(m, n);
    if (!fs::exists(path)) {
      if (!opt_.build) throw MissingArtifact(path.string());
      const std::string stage = std::string("detector_") + detectors::modality_name(m) + "_n" + std::to_string(n);
      auto sink = stage_logger(stage);
      const auto t0 = std::chrono::steady_clock::now();
      auto res = train_detector(m, data(), dc, cfg_.train, sink);
      fs::create_directories(path.parent_path());
      nn::save_checkpoint(path.string(), res.model.to_checkpoint());
      nlohmann::json sum = {{"initial_loss", res.initial_loss},
                            {"best_epoch", res.best_epoch},
                            {"best_val_balanced_accuracy", res.best_val_accuracy},
                            {"seconds", seconds_since(t0)},
                            {"parameters", res.model.parameter_count()}};
      write_text(fs::path(path).replace_extension(".json"), sum.dump(2) + "\n");
    }
    auto ck = nn::load_checkpoint(path.string());
    if (opt_.fp16) ck = nn::quantize_fp16(ck);
    return Detector::from_checkpoint(ck, &dc);
  }

  const ScoreCache& cache(std::size_t ns, std::size_t ng) { return cache_impl(ns, ng, false); }
  const ScoreCache& challenge_cache(std::size_t ns, std::size_t ng) { return cache_impl(ns, ng, true); }

  NeuralPolicy policy(const VariantSpec& v) {
    if (v.fsm) throw InvalidInput("variant " + v.key + " has no neural policy");
    const auto pc = v.policy_config();
    const auto path = policy_path(v);
    if (!fs::exists(path)) {
      if (!opt_.build) throw MissingArtifact(path.string());
      if (opt_.fp16) throw InvalidInput("policies are trained in FP32; train before evaluating in FP16");
      const auto t0 = std::chrono::steady_clock::now();
      auto res = train_policy(cache(v.n_speech, v.n_gesture), pc, cfg_.train, stage_logger("policy_" + v.name()));
      fs::create_directories(path.parent_path());
      nn::save_checkpoint(path.string(), res.model.to_checkpoint());
      nlohmann::json sum = {{"initial_loss", res.initial_loss},
                            {"best_epoch", res.best_epoch},
                            {"best_val_eer", res.best_val_eer},
                            {"epochs_run", res.history.size()},
                            {"seconds", seconds_since(t0)},
                            {"parameters", res.model.parameter_count()}};
      write_text(fs::path(path).replace_extension(".json"), sum.dump(2) + "\n");
    }
    auto ck = nn::load_checkpoint(path.string());
    if (opt_.fp16) ck = nn::quantize_fp16(ck);
    auto p = NeuralPolicy::from_checkpoint(ck);
    if (p.config().to_json() != pc.to_json())
      throw ShapeMismatch(path.string() + ": policy config " + p.config().to_json().dump() + " differs from " +
                          pc.to_json().dump());
    return p;
  }

  FsmParams fsm(const VariantSpec& v) {
    if (!v.fsm) throw InvalidInput("variant " + v.key + " is not an FSM variant");
    const auto path = fsm_path(v);
    if (!fs::exists(path)) {
      if (!opt_.build) throw MissingArtifact(path.string());
      const auto t0 = std::chrono::steady_clock::now();
      auto res = tune_fsm(cache(v.n_speech, v.n_gesture), v.fsm_input, cfg_.fsm_budget, cfg_.seed(),
                          stage_logger("fsm_" + v.name()));
      fs::create_directories(path.parent_path());
      res.params.save(path.string());
      nlohmann::json sum = {{"objective", res.objective},
                            {"default_objective", res.default_objective},
                            {"frr", res.op.frr},
                            {"far", res.op.far},
                            {"budget", cfg_.fsm_budget},
                            {"seconds", seconds_since(t0)}};
      write_text(fs::path(path).replace_extension(".json"), sum.dump(2) + "\n");
    }
    return FsmParams::load(path.string());
  }

  void progress(const nlohmann::json& j) const { log_to(opt_.log, j); }

 private:
  static double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  Logger stage_logger(const std::string& stage) {
    fs::create_directories(root_ / "logs");
    auto file = std::make_shared<std::ofstream>(log_path(stage), std::ios::trunc);
    auto outer = opt_.log;
    return [file, outer](const nlohmann::json& j) {
      *file << j.dump() << '\n';
      file->flush();
      log_to(outer, j);
    };
  }

  // Derived artifacts are only valid for the corpus and training settings
  // they were built from.
  void check_stamp() {
    nlohmann::json stamp = {{"corpus", digest_},
                            {"train", cfg_.train.to_json()},
                            {"fsm_budget", cfg_.fsm_budget}};
    const auto path = root_ / "workspace.json";
    if (fs::exists(path)) {
      nlohmann::json old;
      try {
        old = nlohmann::json::parse(read_text(path));
      } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
      }
      if (old != stamp)
        throw InvalidInput("workspace " + root_.string() +
                           " was built from a different corpus or training config (use --force or another --out)");
      return;
    }
    if (opt_.build) write_text(path, stamp.dump(2) + "\n");
  }

  const ScoreCache& cache_impl(std::size_t ns, std::size_t ng, bool challenge) {
    const auto key = cache_path(ns, ng, challenge).string();
    if (auto it = caches_.find(key); it != caches_.end()) return it->second;
    const auto speech = detector(Modality::kSpeech, ns);
    const auto gesture = detector(Modality::kGesture, ng);
    const auto sid = checkpoint_digest(speech.to_checkpoint());
    const auto gid = checkpoint_digest(gesture.to_checkpoint());
    // Caches are pure functions of the detectors and the corpus, so they are
    // rebuilt whenever they are absent or stale, even when training is off.
    std::optional<ScoreCache> c;
    if (fs::exists(key)) {
      c = load_cache(key);
      if (c->speech_id != sid || c->gesture_id != gid) c.reset();
    }
    if (!c) {
      progress({{"stage", "score"}, {"cache", key}});
      c = score_corpus(speech, gesture, challenge ? challenge_data() : data());
      fs::create_directories(fs::path(key).parent_path());
      save_cache(key, *c);
    }
    return caches_.emplace(key, std::move(*c)).first->second;
  }

  fs::path root_, corpus_;
  ExperimentConfig cfg_;
  Options opt_;
  std::string digest_;
  std::unique_ptr<Dataset> data_, challenge_;
  std::map<std::string, ScoreCache> caches_;
};

}  // namespace rts::train
