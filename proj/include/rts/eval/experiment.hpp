// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rts/eval/metrics.hpp"
#include "rts/train/workspace.hpp"

namespace rts::eval {

using train::CachedSession;
using train::Split;
using train::VariantSpec;
using train::Workspace;

inline constexpr const char* kEerMetric = "EER";
inline constexpr const char* kFsmMetric = "(FRR+FAR)/2";

struct VariantResult {
  VariantSpec variant;
  std::size_t parameters = 0;  // fusion policy only
  std::string metric;          // kEerMetric or kFsmMetric
  double value = 0;            // the comparison number
  OperatingPoint op;           // at the EER threshold, or the FSM's tuned point
  bool degenerate = false;
  DetCurve curve;  // grid sweep for plotting; empty for FSM rows
  double seconds = 0;
};

// Exact-threshold EER of a neural variant on one split, or the FSM's
// (FRR + FAR) / 2 at its tuned configuration.
inline VariantResult evaluate_variant(Workspace& ws, const VariantSpec& v, Split split = Split::kTest) {
  const auto t0 = std::chrono::steady_clock::now();
  VariantResult r;
  r.variant = v;
  r.parameters = v.policy_parameters();
  const auto sessions = ws.cache(v.n_speech, v.n_gesture).split(split);
  if (sessions.empty()) throw InvalidInput(std::string("no sessions in split ") + synth::split_name(split));
  if (v.fsm) {
    r.metric = kFsmMetric;
    r.op = train::evaluate_fsm(ws.fsm(v), v.fsm_input, sessions);
    r.value = train::fsm_objective(r.op);
  } else {
    r.metric = kEerMetric;
    const auto scored = train::score_policy(ws.policy(v), sessions);
    const auto e = compute_eer(scored);
    r.value = e.eer;
    r.degenerate = e.degenerate;
    r.op = evaluate_threshold(scored, e.theta);
    r.curve = curve_at(scored, log_grid());
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

// FSM operating point at a target FRR. Saturated detector probabilities make
// single-threshold scaling jump between FRR 0 and 1, so the FSM gets a
// constrained search instead: the tuned config under a grid of entry
// threshold scales plus seeded random draws from the tuning box. Among
// candidates whose validation FRR lies within tol of the target, the one
// with the fewest validation false accepts wins.
struct FsmCalibration {
  double lambda = 1;  // threshold scale of the winner, 0 for a random draw
  fusion::FsmParams params;
  OperatingPoint op;
  std::size_t candidates = 0, feasible = 0;
};

inline FsmCalibration calibrate_fsm_frr(const fusion::FsmParams& p, fusion::FsmInput input,
                                        const std::vector<const CachedSession*>& val, double target, double tol,
                                        std::size_t budget, std::uint64_t seed) {
  if (std::none_of(val.begin(), val.end(), [](const CachedSession* s) { return s->scenario.positive; })) throw InvalidInput("fsm calibration: no positive validation sessions");
  constexpr std::size_t kScales = 541;  // lambda in [0.3, 3.0], step 0.005
  std::vector<fusion::FsmParams> cand;
  std::vector<double> lambda;
  for (std::size_t i = 0; i < kScales; ++i) {
    lambda.push_back(0.3 + 0.005 * static_cast<double>(i));
    cand.push_back(p.scaled(lambda.back()));
  }
  std::mt19937_64 rng(mix_seed(seed, 0xca1));
  for (std::size_t i = 0; i < budget; ++i) {
    cand.push_back(fusion::FsmParams::sample(rng));
    lambda.push_back(0);
  }
  const auto truth = train::truth_only(val);
  std::vector<OperatingPoint> ops(cand.size());
  parallel_for(cand.size(), [&](std::size_t i) {
    ops[i] = evaluate_events(truth, train::fsm_predictions(cand[i], input, val));
  });
  FsmCalibration c;
  c.candidates = cand.size();
  std::size_t best = cand.size();
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (std::abs(ops[i].frr - target) > tol) continue;
    ++c.feasible;
    if (best == cand.size() || ops[i].false_accepts < ops[best].false_accepts ||
        (ops[i].false_accepts == ops[best].false_accepts &&
         std::abs(ops[i].frr - target) < std::abs(ops[best].frr - target)))
      best = i;
  }
  if (best == cand.size()) {
    std::vector<std::size_t> hist(21, 0);
    for (const auto& o : ops) ++hist[static_cast<std::size_t>(std::lround(o.frr * 20))];
    std::ostringstream dump;
    dump << "fsm calibration infeasible: none of " << cand.size() << " candidates gives FRR within " << tol
         << " of " << target << "\nfrr_bin,candidates\n";
    for (std::size_t i = 0; i < hist.size(); ++i) dump << 0.05 * static_cast<double>(i) << ',' << hist[i] << '\n';
    throw NumericError(dump.str());
  }
  c.lambda = lambda[best];
  c.params = cand[best];
  c.op = ops[best];
  return c;
}

// False positives per challenge scenario at an operating point calibrated
// to the target FRR on validation positives.
struct ChallengeResult {
  VariantSpec variant;
  double val_frr = 0;
  double theta = 0;   // neural threshold
  double lambda = 1;  // FSM threshold scale, 0 when a random draw won
  std::vector<ScenarioRow> rows;

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.false_accepts;
    return n;
  }
};

inline ChallengeResult challenge_breakdown(Workspace& ws, const VariantSpec& v) {
  const auto& cfg = ws.config();
  const auto val = ws.cache(v.n_speech, v.n_gesture).split(Split::kVal);
  const auto chal = ws.challenge_cache(v.n_speech, v.n_gesture).split(Split::kTest);
  ChallengeResult r;
  r.variant = v;
  if (v.fsm) {
    const auto cal = calibrate_fsm_frr(ws.fsm(v), v.fsm_input, val, cfg.target_frr, cfg.frr_tolerance,
                                       cfg.fsm_budget, cfg.seed());
    r.val_frr = cal.op.frr;
    r.lambda = cal.lambda;
    r.rows = scenario_breakdown(train::truth_only(chal), train::fsm_predictions(cal.params, v.fsm_input, chal));
  } else {
    const auto pol = ws.policy(v);
    std::vector<const CachedSession*> pos;
    for (const auto* s : val)
      if (s->scenario.positive) pos.push_back(s);
    const auto op = calibrate_frr(train::score_policy(pol, pos), cfg.target_frr, cfg.frr_tolerance);
    r.val_frr = op.frr;
    r.theta = op.theta;
    const auto scored = train::score_policy(pol, chal);
    r.rows = scenario_breakdown(scored, predictions_at(scored, op.theta));
  }
  return r;
}

// EER change when detector and policy weights are rounded through FP16 and
// the test split is re-scored from features.
struct QuantizedResult {
  VariantSpec variant;
  double eer_fp32 = 0, eer_fp16 = 0;
  std::size_t bytes_fp32 = 0, bytes_fp16 = 0;  // encoded checkpoints, detectors + policy
  double delta() const { return eer_fp16 - eer_fp32; }
};

inline QuantizedResult evaluate_quantized(Workspace& ws, const VariantSpec& v) {
  if (v.fsm) throw InvalidInput("fp16 evaluation needs a neural variant");
  QuantizedResult q;
  q.variant = v;
  const auto s32 = ws.detector(detectors::Modality::kSpeech, v.n_speech);
  const auto g32 = ws.detector(detectors::Modality::kGesture, v.n_gesture);
  const auto p32 = ws.policy(v);
  const auto sck = s32.to_checkpoint(), gck = g32.to_checkpoint(), pck = p32.to_checkpoint();
  const auto s16ck = nn::quantize_fp16(sck), g16ck = nn::quantize_fp16(gck), p16ck = nn::quantize_fp16(pck);
  for (const auto* ck : {&sck, &gck, &pck}) q.bytes_fp32 += nn::encode_checkpoint(*ck).size();
  for (const auto* ck : {&s16ck, &g16ck, &p16ck}) q.bytes_fp16 += nn::encode_checkpoint(*ck).size();
  const auto s16 = detectors::Detector::from_checkpoint(s16ck, &s32.config());
  const auto g16 = detectors::Detector::from_checkpoint(g16ck, &g32.config());
  const auto p16 = fusion::NeuralPolicy::from_checkpoint(p16ck);

  const auto sessions32 = ws.cache(v.n_speech, v.n_gesture).split(Split::kTest);
  q.eer_fp32 = compute_eer(train::score_policy(p32, sessions32)).eer;

  const auto test = ws.data().split(Split::kTest);
  std::vector<CachedSession> c16(test.size());
  parallel_for(test.size(), [&](std::size_t i) { c16[i] = train::score_example(s16, g16, *test[i]); });
  std::vector<const CachedSession*> ptr;
  for (const auto& c : c16) ptr.push_back(&c);
  q.eer_fp16 = compute_eer(train::score_policy(p16, ptr)).eer;
  return q;
}

}  // namespace rts::eval
