// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

// rts: generate, train, tune, evaluate, sweep and benchmark trigger detectors.

#include <chrono>
#include <ctime>
#include <iostream>

#include <CLI11.hpp>

#include "rts/eval/bench.hpp"
#include "rts/eval/report.hpp"
#include "rts/train/sweep.hpp"

namespace {

using namespace rts;
namespace fs = std::filesystem;
using nlohmann::json;

enum Exit { kOk = 0, kOther = 1, kUsage = 2, kMissing = 3, kNumeric = 4 };

struct Common {
  std::uint64_t seed = 1;
  std::size_t threads = 0;
  bool force = false;
  bool verbose = false;
  std::string config;
  std::string out = "rts_work";
  std::string corpus;
  std::string precision = "fp32";
};

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// One manifest per artifact directory; rewritten by each command that
// writes into that directory.
class RunManifest {
 public:
  RunManifest(std::string command, const train::ExperimentConfig& cfg, std::vector<std::string> argv)
      : started_(utc_now()) {
    j_ = {{"command", std::move(command)},
          {"argv", std::move(argv)},
          {"config_hash", cfg.hash()},
          {"config", cfg.to_json()},
          {"seed", cfg.seed()},
          {"tool_version", kVersion},
          {"inputs", json::array()},
          {"outputs", json::array()}};
    const auto h = eval::host_info();
    j_["host"] = {{"cpu", h.cpu}, {"cores", h.cores}};
  }
  void input(const fs::path& p) { j_["inputs"].push_back(p.string()); }
  void output(const fs::path& p) { j_["outputs"].push_back(p.string()); }
  void set(const std::string& k, json v) { j_[k] = std::move(v); }
  void write(const fs::path& dir) {
    j_["started"] = started_;
    j_["finished"] = utc_now();
    train::write_text(dir / "run.json", j_.dump(2) + "\n");
  }

 private:
  std::string started_;
  json j_;
};

train::ExperimentConfig load_config(const Common& c) {
  auto cfg = c.config.empty() ? train::ExperimentConfig{} : train::ExperimentConfig::load(c.config);
  cfg.set_seed(c.seed);
  cfg.validate();
  return cfg;
}

fs::path corpus_dir(const Common& c) { return c.corpus.empty() ? fs::path(c.out) / "corpus" : fs::path(c.corpus); }

train::Workspace open_workspace(const Common& c, const train::ExperimentConfig& cfg, bool build) {
  if (c.precision != "fp32" && c.precision != "fp16") throw InvalidInput("--precision must be fp32 or fp16");
  if (c.force && build) {
    for (const char* d : {"detectors", "cache", "policies", "fsm", "logs"}) fs::remove_all(fs::path(c.out) / d);
    fs::remove(fs::path(c.out) / "workspace.json");
  }
  train::Workspace::Options opt;
  opt.build = build;
  opt.fp16 = c.precision == "fp16";
  if (c.verbose) opt.log = [](const json& j) { std::cerr << j.dump() << '\n'; };
  return train::Workspace(c.out, corpus_dir(c), cfg, opt);
}

std::vector<std::string> g_argv;

int cmd_gen(const Common& c) {
  const auto cfg = load_config(c);
  const fs::path dir = c.out;
  const auto sum = train::generate_corpus(cfg.corpus, cfg.challenge_per_scenario, dir, c.force);
  std::cout << "subjects train/val/test: " << sum.subjects[0] << '/' << sum.subjects[1] << '/' << sum.subjects[2]
            << '\n';
  std::cout << "sessions train/val/test: " << sum.sessions[0] << '/' << sum.sessions[1] << '/' << sum.sessions[2]
            << '\n';
  std::cout << "challenge sessions: " << sum.challenge_sessions << '\n';
  std::cout << "manifest digest: " << sum.digest << '\n';
  RunManifest m("gen", cfg, g_argv);
  m.output(dir / train::kManifestFile);
  m.output(dir / train::kChallengeFile);
  m.set("manifest_digest", sum.digest);
  m.set("subjects", sum.subjects);
  m.set("sessions", sum.sessions);
  m.write(dir);
  return kOk;
}

int cmd_train(const Common& c, const std::string& variants) {
  const auto cfg = load_config(c);
  auto ws = open_workspace(c, cfg, true);
  RunManifest m("train", cfg, g_argv);
  m.input(ws.corpus_dir());
  for (const auto& v : train::parse_variants(variants)) {
    if (v.fsm) {
      ws.fsm(v);
      m.output(ws.fsm_path(v));
      std::cout << v.key << ": " << ws.fsm_path(v).string() << '\n';
    } else {
      const auto p = ws.policy(v);
      m.output(ws.policy_path(v));
      std::cout << v.key << ": " << ws.policy_path(v).string() << " (" << p.parameter_count() << " parameters)\n";
    }
  }
  m.write(ws.root());
  return kOk;
}

int cmd_tune(const Common& c, const std::string& variant, std::size_t budget) {
  auto cfg = load_config(c);
  if (budget) cfg.fsm_budget = budget;
  auto ws = open_workspace(c, cfg, true);
  const auto v = train::parse_variant(variant);
  if (!v.fsm) throw InvalidInput("tune-fsm needs an FSM variant (e.g. a or fsm-logit-s1-g1)");
  const auto p = ws.fsm(v);
  std::cout << p.to_text();
  const auto sum = train::read_text(fs::path(ws.fsm_path(v)).replace_extension(".json"));
  std::cout << sum;
  RunManifest m("tune-fsm", cfg, g_argv);
  m.input(ws.corpus_dir());
  m.output(ws.fsm_path(v));
  m.write(ws.root());
  return kOk;
}

int cmd_eval(const Common& c, const std::string& variant, bool challenge) {
  const auto cfg = load_config(c);
  auto ws = open_workspace(c, cfg, false);
  const auto v = train::parse_variant(variant);
  const auto r = eval::evaluate_variant(ws, v);
  const fs::path dir = fs::path(c.out) / "eval" / (v.key + (ws.fp16() ? "_fp16" : ""));
  fs::create_directories(dir);
  json report = eval::to_json(r);
  report["precision"] = c.precision;
  RunManifest m("eval", cfg, g_argv);
  m.input(ws.corpus_dir());
  m.input(v.fsm ? ws.fsm_path(v) : ws.policy_path(v));
  std::cout << v.key << " (" << v.name() << ", " << c.precision << ")\n";
  std::cout << r.metric << ": " << eval::fixed(r.value) << (r.degenerate ? " (degenerate curve)" : "") << '\n';
  std::cout << "FRR: " << eval::fixed(r.op.frr) << "  FAR/session: " << eval::fixed(r.op.far)
            << "  FA/hour: " << eval::fixed(r.op.fa_per_hour, 2) << '\n';
  if (!v.fsm) {
    train::write_text(dir / "det.csv", eval::det_csv(r.curve));
    train::write_text(dir / "det.svg", eval::det_svg({{v.key, r.curve}}));
    m.output(dir / "det.csv");
    m.output(dir / "det.svg");
    std::cout << "DET CSV: " << (dir / "det.csv").string() << '\n';
  }
  if (challenge) {
    const auto ch = eval::challenge_breakdown(ws, v);
    report["challenge"] = eval::to_json(ch);
    std::cout << eval::challenge_text({ch});
  }
  train::write_text(dir / "report.json", report.dump(2) + "\n");
  m.output(dir / "report.json");
  m.write(dir);
  std::cout << "report: " << (dir / "report.json").string() << '\n';
  return kOk;
}

int cmd_sweep(const Common& c, const std::string& candidates) {
  const auto cfg = load_config(c);
  auto ws = open_workspace(c, cfg, true);
  const auto variants = train::parse_variants(candidates);
  const auto rows = train::run_sweep(ws, variants);
  const fs::path dir = fs::path(c.out) / "sweep";
  std::vector<std::pair<std::string, eval::DetCurve>> curves;
  std::vector<std::pair<std::string, eval::OperatingPoint>> points;
  json j = json::array();
  for (const auto& r : rows) {
    (r.variant.fsm ? static_cast<void>(points.emplace_back(r.variant.key, r.op))
                   : static_cast<void>(curves.emplace_back(r.variant.key, r.curve)));
    j.push_back(eval::to_json(r));
  }
  train::write_text(dir / "sweep.csv", eval::sweep_csv(rows));
  train::write_text(dir / "sweep.txt", eval::sweep_text(rows));
  train::write_text(dir / "sweep.json", j.dump(2) + "\n");
  train::write_text(dir / "det.svg", eval::det_svg(curves, points));
  std::cout << eval::sweep_text(rows);
  std::cout << "CSV: " << (dir / "sweep.csv").string() << '\n';
  RunManifest m("sweep", cfg, g_argv);
  m.input(ws.corpus_dir());
  for (const char* f : {"sweep.csv", "sweep.txt", "sweep.json", "det.svg"}) m.output(dir / f);
  m.write(dir);
  return kOk;
}

int cmd_bench(const Common& c, const std::string& variant, std::size_t iters, std::size_t warmup, bool untrained) {
  auto cfg = load_config(c);
  if (iters) cfg.bench_iters = iters;
  const auto v = train::parse_variant(variant);
  detectors::Detector speech, gesture;
  std::optional<fusion::NeuralPolicy> policy;
  std::optional<fusion::FsmParams> fsm;
  if (untrained) {
    nn::Rng rng(mix_seed(cfg.seed(), 0xbe));
    speech = detectors::Detector(detectors::DetectorConfig::speech(v.n_speech));
    gesture = detectors::Detector(detectors::DetectorConfig::gesture(v.n_gesture));
    speech.init(rng);
    gesture.init(rng);
    if (v.fsm) {
      fsm = fusion::FsmParams{};
    } else {
      policy.emplace(v.policy_config());
      policy->init(rng);
    }
  } else {
    auto ws = open_workspace(c, cfg, false);
    speech = ws.detector(detectors::Modality::kSpeech, v.n_speech);
    gesture = ws.detector(detectors::Modality::kGesture, v.n_gesture);
    if (v.fsm)
      fsm = ws.fsm(v);
    else
      policy = ws.policy(v);
  }
  synth::SynthConfig sc;
  sc.min_duration = sc.max_duration = 10.0;
  data::Scenario scen;
  scen.positive = true;
  const auto session = synth::generate_session(synth::SubjectProfile::sample(0, cfg.seed(), sc), scen,
                                               mix_seed(cfg.seed(), 0xbe1), sc, "bench");
  auto pipe = v.fsm ? eval::Pipeline(speech, gesture, *fsm, v.fsm_input) : eval::Pipeline(speech, gesture, *policy);
  const auto b = eval::benchmark(pipe, session, cfg.bench_iters, warmup, v.key);
  const fs::path dir = fs::path(c.out) / "bench";
  auto j = b.to_json();
  j["weights"] = untrained ? "untrained" : "trained";
  j["variant_name"] = v.name();
  train::write_text(dir / (v.key + ".json"), j.dump(2) + "\n");
  std::cout << v.key << " (" << v.name() << "): " << b.per_tick_ms.size() << " iterations after " << b.warmup
            << " warm-up, " << b.ticks_per_iteration << " ticks each\n";
  std::cout << "mean " << eval::fixed(b.mean_ms, 4) << " ms/tick, p95 " << eval::fixed(b.p95_ms, 4)
            << " ms/tick, peak RSS " << b.peak_rss_kib << " KiB\n";
  std::cout << "host: " << b.host.cpu << " (" << b.host.cores << " cores)\n";
  RunManifest m("bench", cfg, g_argv);
  m.output(dir / (v.key + ".json"));
  m.write(dir);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  g_argv.assign(argv, argv + argc);
  CLI::App app{"Wrist-raise voice trigger detection: corpus, training, evaluation, benchmarks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(rts::kVersion));
  Common c;
  auto common = [&](CLI::App* s) {
    s->add_option("--seed", c.seed, "Seed for every stochastic step")->capture_default_str();
    s->add_option("--threads", c.threads, "Worker thread cap (default: host cores)");
    s->add_flag("--force", c.force, "Replace existing outputs");
    s->add_option("--config", c.config, "Experiment config (JSON, schema_version 1)");
    s->add_option("--out", c.out, "Output directory")->capture_default_str();
    s->add_option("--precision", c.precision, "Weight precision for evaluation")
        ->check(CLI::IsMember({"fp32", "fp16"}))
        ->capture_default_str();
    s->add_flag("-v,--verbose", c.verbose, "Print progress records to stderr");
  };
  auto with_corpus = [&](CLI::App* s) {
    s->add_option("--corpus", c.corpus, "Corpus directory (default: <out>/corpus)");
  };

  auto* gen = app.add_subcommand("gen", "Generate the synthetic corpus and challenge set into --out");
  common(gen);

  std::string variants = "d";
  auto* tr = app.add_subcommand("train", "Train detectors and fusion policies for the given variants");
  common(tr);
  with_corpus(tr);
  tr->add_option("--variant,--candidates", variants, "Comma-separated variants (a-f, long names, or all)")
      ->capture_default_str();

  std::string fsm_variant = "a";
  std::size_t budget = 0;
  auto* tune = app.add_subcommand("tune-fsm", "Random-search the FSM hyperparameters on validation");
  common(tune);
  with_corpus(tune);
  tune->add_option("--variant", fsm_variant, "FSM variant")->capture_default_str();
  tune->add_option("--budget", budget, "Number of sampled configurations (default from config: 2000)");

  std::string eval_variant = "d";
  bool challenge = false;
  auto* ev = app.add_subcommand("eval", "Evaluate a trained variant on the test split");
  common(ev);
  with_corpus(ev);
  ev->add_option("--variant", eval_variant, "Variant to evaluate")->capture_default_str();
  ev->add_flag("--challenge", challenge, "Add the challenge-scenario breakdown at the calibrated FRR");

  std::string candidates = "a,b,c,d,e,f";
  auto* sw = app.add_subcommand("sweep", "Train and evaluate a set of variants; writes a comparison CSV");
  common(sw);
  with_corpus(sw);
  sw->add_option("--candidates,--variant", candidates, "Comma-separated variants (a-f, long names, or all)")
      ->capture_default_str();

  std::string bench_variant = "a";
  std::size_t iters = 0, warmup = 5;
  bool untrained = false;
  auto* be = app.add_subcommand("bench", "Benchmark the streaming pipeline of one variant");
  common(be);
  with_corpus(be);
  be->add_option("--variant", bench_variant, "Variant to benchmark")->capture_default_str();
  be->add_option("--iters", iters, "Timed iterations (default from config: 30)");
  be->add_option("--warmup", warmup, "Warm-up iterations")->capture_default_str();
  be->add_flag("--untrained", untrained, "Use freshly initialized weights (latency does not depend on them)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  if (c.threads) thread_cap() = c.threads;
  try {
    if (*gen) return cmd_gen(c);
    if (*tr) return cmd_train(c, variants);
    if (*tune) return cmd_tune(c, fsm_variant, budget);
    if (*ev) return cmd_eval(c, eval_variant, challenge);
    if (*sw) return cmd_sweep(c, candidates);
    if (*be) return cmd_bench(c, bench_variant, iters, warmup, untrained);
  } catch (const MissingArtifact& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kMissing;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumeric;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kUsage;
}
